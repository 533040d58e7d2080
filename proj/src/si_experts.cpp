#include "drda/si_experts.hpp"

#include "drda/interpolation.hpp"
#include "drda/moments.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace drda {

using barrier::MatrixInequality;
using barrier::Problem;
using barrier::ScalarInequality;

double default_si_epsilon(const MomentPair& target) {
    return 1e-6 * target.second_moment().trace() / static_cast<double>(target.dim());
}

double schur_value(const Matrix& big_m) {
    const Eigen::Index d = big_m.rows() - 1;
    if (d == 0) return big_m(0, 0);
    Eigen::LDLT<Matrix> ldlt(big_m.topLeftCorner(d, d));
    const Vector mxy = big_m.topRightCorner(d, 1);
    return big_m(d, d) - mxy.dot(ldlt.solve(mxy));
}

Vector beta_from_second_moment(const Matrix& big_m) {
    const Eigen::Index d = big_m.rows() - 1;
    Eigen::LDLT<Matrix> ldlt(big_m.topLeftCorner(d, d));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericError("singular second-moment block");
    return ldlt.solve(big_m.topRightCorner(d, 1));
}

MembershipReport check_membership(const Vector& mu, const Matrix& sigma, const MomentPair& source,
                                  const MomentPair& target, const SiConfig& cfg, DivergenceKind kind) {
    if (mu.size() != source.dim() || sigma.rows() != source.dim() || target.dim() != source.dim()) {
        throw NumericError("moment dimension mismatch");
    }
    const MomentPair point{mu, symmetrize(sigma)};
    const double eps = cfg.epsilon.value_or(default_si_epsilon(target));
    MembershipReport rep;
    try {
        rep.source_residual = divergence(kind, point, source) - cfg.rho_s;
        rep.target_residual = divergence(kind, point, target) - cfg.rho_t;
    } catch (const NumericError&) {
        // Outside the divergence's domain (e.g. singular sigma for KL).
        rep.source_residual = rep.target_residual = std::numeric_limits<double>::infinity();
    }
    rep.floor_residual = eps - min_eigenvalue(point.second_moment());
    rep.member = rep.source_residual <= cfg.feas_tol && rep.target_residual <= cfg.feas_tol &&
                 rep.floor_residual <= cfg.feas_tol;
    return rep;
}

namespace {

// Upper-triangular parametrization of a symmetric n x n block stored at
// x[offset, offset + n(n+1)/2).
struct SymBlock {
    Eigen::Index offset = 0;
    Eigen::Index n = 0;

    Eigen::Index count() const { return n * (n + 1) / 2; }

    Eigen::Index index(Eigen::Index i, Eigen::Index j) const {
        if (i > j) std::swap(i, j);
        // Row-major upper triangle.
        return offset + i * n - i * (i - 1) / 2 + (j - i);
    }

    Matrix read(const Vector& x) const {
        Matrix m(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) m(i, j) = m(j, i) = x(index(i, j));
        }
        return m;
    }

    void write(const Matrix& m, Vector& x) const {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) x(index(i, j)) = 0.5 * (m(i, j) + m(j, i));
        }
    }

    // Adds the basis of this block into a size x size inequality at (row0, col0),
    // scaled by `sign`.
    void embed(MatrixInequality& c, Eigen::Index row0, Eigen::Index col0, double sign) const {
        const Eigen::Index size = c.constant.rows();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                Matrix e = Matrix::Zero(size, size);
                e(row0 + i, col0 + j) += sign;
                if (i != j) e(row0 + j, col0 + i) += sign;
                c.add(index(i, j), std::move(e));
            }
        }
    }
};

MatrixInequality zero_inequality(Eigen::Index size) {
    MatrixInequality c;
    c.constant = Matrix::Zero(size, size);
    return c;
}

void add_vector_border(MatrixInequality& c, Eigen::Index mu_offset, Eigen::Index p) {
    const Eigen::Index size = c.constant.rows();
    for (Eigen::Index i = 0; i < p; ++i) {
        Matrix e = Matrix::Zero(size, size);
        e(i, p) = e(p, i) = 1.0;
        c.add(mu_offset + i, std::move(e));
    }
}

// M - tau e_p e_pᵀ >= 0 and M - eps I >= 0.
void add_common_constraints(Problem& pb, const SymBlock& m, Eigen::Index tau_idx, double eps) {
    const Eigen::Index p = m.n;
    MatrixInequality schur = zero_inequality(p);
    m.embed(schur, 0, 0, 1.0);
    Matrix e = Matrix::Zero(p, p);
    e(p - 1, p - 1) = -1.0;
    schur.add(tau_idx, e);
    pb.matrix_constraints.push_back(std::move(schur));

    MatrixInequality floor = zero_inequality(p);
    floor.constant = -eps * Matrix::Identity(p, p);
    m.embed(floor, 0, 0, 1.0);
    pb.matrix_constraints.push_back(std::move(floor));
}

struct Candidate {
    MomentPair point;  // (mu, Sigma)
    double slack = -1.0;
};

// Relative slack min_k (rho_k - psi_k) / max(rho_k, tiny); negative if outside.
double relative_slack(DivergenceKind kind, const MomentPair& pt, const MomentPair& source, const MomentPair& target,
                      double rho_s, double rho_t, double eps) {
    try {
        if (min_eigenvalue(pt.second_moment()) <= eps) return -1.0;
        const double ds = divergence(kind, pt, source);
        const double dt = divergence(kind, pt, target);
        return std::min((rho_s - ds) / std::max(rho_s, 1e-300), (rho_t - dt) / std::max(rho_t, 1e-300));
    } catch (const NumericError&) {
        return -1.0;
    }
}

// A point well inside both balls: start from the intersection witness and
// slide along lifted segments (mu, M) toward either center, which stay inside
// the (convex) lifted balls.
Candidate interior_point(DivergenceKind kind, const MomentPair& witness, const MomentPair& source,
                         const MomentPair& target, double rho_s, double rho_t, double eps) {
    Candidate best{witness, relative_slack(kind, witness, source, target, rho_s, rho_t, eps)};
    const Matrix mw = witness.second_moment();
    for (const MomentPair* end : {&source, &target}) {
        const Matrix me = end->second_moment();
        for (int k = 1; k <= 64; ++k) {
            const double theta = k / 65.0;
            MomentPair pt;
            pt.mean = (1.0 - theta) * witness.mean + theta * end->mean;
            const Matrix m = (1.0 - theta) * mw + theta * me;
            pt.cov = symmetrize(m - pt.mean * pt.mean.transpose());
            const double s = relative_slack(kind, pt, source, target, rho_s, rho_t, eps);
            if (s > best.slack) best = {pt, s};
        }
    }
    // Lift the floor if the witness sits too close to it.
    if (min_eigenvalue(best.point.second_moment()) <= 2.0 * eps) {
        MomentPair pt = best.point;
        pt.cov.diagonal().array() += 2.0 * eps;
        const double s = relative_slack(kind, pt, source, target, rho_s, rho_t, eps);
        if (s > 0.0) best = {pt, s};
    }
    return best;
}

SiSolution degenerate_solution(const MomentPair& pt, DivergenceKind kind, const MomentPair& source,
                               const MomentPair& target, const SiConfig& cfg) {
    SiSolution sol;
    sol.mu = pt.mean;
    sol.big_m = pt.second_moment();
    sol.tau = schur_value(sol.big_m);
    sol.beta.beta = beta_from_second_moment(sol.big_m);
    sol.converged = check_membership(pt.mean, pt.cov, source, target, cfg, kind).member;
    sol.kkt_residual = 0.0;
    return sol;
}

std::string radii_message(const SiConfig& cfg, double minimum) {
    std::ostringstream os;
    os.precision(10);
    os << "empty ambiguity set (rho_s=" << cfg.rho_s << ", rho_t=" << cfg.rho_t << ", minimum rho_t=" << minimum
       << ")";
    return os.str();
}

std::string floor_message(const SiConfig& cfg, double eps) {
    std::ostringstream os;
    os.precision(10);
    os << "empty ambiguity set above the epsilon floor (rho_s=" << cfg.rho_s << ", rho_t=" << cfg.rho_t
       << ", epsilon=" << eps << ")";
    return os.str();
}

barrier::Options barrier_options(const SiConfig& cfg) {
    barrier::Options o;
    o.max_newton_steps = cfg.max_iters;
    o.opt_tol = cfg.opt_tol;
    return o;
}

}  // namespace

SiSolution solve_si_kl(const MomentPair& source, const MomentPair& target, const SiConfig& cfg,
                       const barrier::SolverBackend& backend) {
    if (!(cfg.rho_s > 0.0) || !(cfg.rho_t > 0.0)) throw NumericError("SI-KL radii must be positive");
    if (!is_positive_definite(source.cov) || !is_positive_definite(target.cov)) {
        throw NumericError("covariance not positive definite");
    }
    const Eigen::Index p = source.dim();
    const double eps = cfg.epsilon.value_or(default_si_epsilon(target));

    const KlRadiusResult radius = min_radius_kl_detail(source, target, cfg.rho_s);
    if (cfg.rho_t < radius.radius - cfg.feas_tol) throw NumericError(radii_message(cfg, radius.radius));

    const Candidate start =
        interior_point(DivergenceKind::KlType, radius.witness, source, target, cfg.rho_s, cfg.rho_t, eps);
    if (start.slack <= 1e-12) {
        if (start.slack < -cfg.feas_tol) throw NumericError(floor_message(cfg, eps));
        return degenerate_solution(start.point, DivergenceKind::KlType, source, target, cfg);
    }

    // Variables: mu (p) | M (sym p) | t | tau.
    const SymBlock m{p, p};
    const Eigen::Index t_idx = p + m.count();
    const Eigen::Index tau_idx = t_idx + 1;
    Problem pb;
    pb.num_vars = tau_idx + 1;

    const Matrix m0 = start.point.second_moment();
    const double scale = std::max(m0.trace() / static_cast<double>(p), 1e-300);
    pb.objective = Vector::Zero(pb.num_vars);
    pb.objective(tau_idx) = -1.0 / scale;

    // Divergence constraints written in (mu, M, t):
    //   mu_kᵀ P_k mu_k - 2 mu_kᵀ P_k mu + tr(M P_k) - log det(M P_k) - log(1 - t) - p <= rho_k.
    for (const MomentPair* center : {&source, &target}) {
        const double rho = center == &source ? cfg.rho_s : cfg.rho_t;
        const Matrix prec = inverse_pd(center->cov);
        const Vector pm = prec * center->mean;
        const double constant =
            center->mean.dot(pm) + logdet_pd(center->cov) - static_cast<double>(p) - rho;
        ScalarInequality c;
        c.evaluate = [=, n = pb.num_vars](const Vector& x, double& value, Vector& grad, Matrix& hess) {
            const double t = x(t_idx);
            if (!(t < 1.0)) return false;
            const Matrix mm = m.read(x);
            Eigen::LLT<Matrix> llt(mm);
            if (llt.info() != Eigen::Success) return false;
            const Matrix minv = llt.solve(Matrix::Identity(p, p));
            double logdet = 0.0;
            for (Eigen::Index i = 0; i < p; ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
            const Vector mu = x.head(p);
            value = constant - 2.0 * pm.dot(mu) + (mm.cwiseProduct(prec)).sum() - logdet - std::log1p(-t);

            grad = Vector::Zero(n);
            hess = Matrix::Zero(n, n);
            grad.head(p) = -2.0 * pm;
            for (Eigen::Index i = 0; i < p; ++i) {
                for (Eigen::Index j = i; j < p; ++j) {
                    const double mult = i == j ? 1.0 : 2.0;
                    grad(m.index(i, j)) = mult * (prec(i, j) - minv(i, j));
                }
            }
            // Hessian of -log det M: tr(M⁻¹ E_a M⁻¹ E_b) for symmetric basis E.
            for (Eigen::Index i = 0; i < p; ++i) {
                for (Eigen::Index j = i; j < p; ++j) {
                    for (Eigen::Index k = 0; k < p; ++k) {
                        for (Eigen::Index l = k; l < p; ++l) {
                            double v = minv(j, k) * minv(l, i);
                            if (k != l) v += minv(j, l) * minv(k, i);
                            if (i != j) {
                                v += minv(i, k) * minv(l, j);
                                if (k != l) v += minv(i, l) * minv(k, j);
                            }
                            hess(m.index(i, j), m.index(k, l)) = v;
                        }
                    }
                }
            }
            const double one_minus_t = 1.0 - t;
            grad(t_idx) = 1.0 / one_minus_t;
            hess(t_idx, t_idx) = 1.0 / (one_minus_t * one_minus_t);
            return true;
        };
        pb.scalar_constraints.push_back(std::move(c));
    }

    // [[M, mu], [muᵀ, t]] >= 0
    MatrixInequality border = zero_inequality(p + 1);
    m.embed(border, 0, 0, 1.0);
    add_vector_border(border, 0, p);
    Matrix et = Matrix::Zero(p + 1, p + 1);
    et(p, p) = 1.0;
    border.add(t_idx, et);
    pb.matrix_constraints.push_back(std::move(border));

    add_common_constraints(pb, m, tau_idx, eps);

    // Strictly feasible start: t a little above muᵀ M⁻¹ mu, tau half the Schur value.
    Vector x0 = Vector::Zero(pb.num_vars);
    x0.head(p) = start.point.mean;
    m.write(m0, x0);
    const double t_star = start.point.mean.dot(inverse_pd(m0) * start.point.mean);
    const double abs_slack = start.slack * std::min(cfg.rho_s, cfg.rho_t);
    x0(t_idx) = 1.0 - (1.0 - t_star) * std::exp(-0.5 * abs_slack);
    x0(tau_idx) = 0.5 * schur_value(m0);
    // A slack this thin cannot be resolved in t; the set is a sliver around the start.
    if (!pb.strictly_feasible(x0)) {
        return degenerate_solution(start.point, DivergenceKind::KlType, source, target, cfg);
    }

    const barrier::Result res = backend.solve(pb, x0, barrier_options(cfg));

    SiSolution sol;
    sol.mu = res.x.head(p);
    sol.big_m = m.read(res.x);
    sol.t = res.x(t_idx);
    sol.tau = schur_value(sol.big_m);
    sol.beta.beta = beta_from_second_moment(sol.big_m);
    std::ostringstream label;
    label << "SI-KL rho_s=" << cfg.rho_s << " rho_t=" << cfg.rho_t;
    sol.beta.provenance = label.str();
    sol.kkt_residual = res.gap_bound * scale;
    const MembershipReport rep = check_membership(
        sol.mu, sol.big_m - sol.mu * sol.mu.transpose(), source, target, cfg, DivergenceKind::KlType);
    sol.converged = res.converged && rep.member;
    return sol;
}

SiSolution solve_si_wasserstein(const MomentPair& source_in, const MomentPair& target_in, const SiConfig& cfg,
                                const barrier::SolverBackend& backend) {
    if (cfg.rho_s < 0.0 || cfg.rho_t < 0.0) throw NumericError("SI-WASS radii must be nonnegative");
    validate(source_in);
    validate(target_in);
    const Eigen::Index p = source_in.dim();
    const double eps = cfg.epsilon.value_or(default_si_epsilon(target_in));

    const double w = wasserstein_divergence(source_in, target_in);
    const double root_w = std::sqrt(w);
    const double minimum =
        cfg.rho_s > 0.0 ? min_radius_wasserstein(source_in, target_in, cfg.rho_s) : w;
    if (cfg.rho_t < minimum - cfg.feas_tol) throw NumericError(radii_message(cfg, minimum));

    // The coupling blocks need PD centers for a strict interior.
    const MomentPair source = ensure_positive_definite(source_in);
    const MomentPair target = ensure_positive_definite(target_in);

    // Geodesic point balancing the two slacks.
    double a = 0.0;
    if (root_w > 0.0) {
        const double lo = std::max(0.0, 1.0 - std::sqrt(cfg.rho_t) / root_w);
        const double hi = std::min(1.0, std::sqrt(cfg.rho_s) / root_w);
        a = std::clamp(0.5 * (lo + hi), 0.0, 1.0);
    }
    const MomentPair witness = wasserstein_geodesic(source, target, a);
    const Candidate start =
        interior_point(DivergenceKind::WassersteinType, witness, source, target, cfg.rho_s, cfg.rho_t, eps);
    if (start.slack <= 1e-12) {
        if (start.slack < -cfg.feas_tol && relative_slack(DivergenceKind::WassersteinType, witness, source_in,
                                                           target_in, cfg.rho_s + cfg.feas_tol,
                                                           cfg.rho_t + cfg.feas_tol, 0.0) < 0.0) {
            throw NumericError(radii_message(cfg, minimum));
        }
        return degenerate_solution(witness, DivergenceKind::WassersteinType, source_in, target_in, cfg);
    }

    // Variables: mu (p) | M (sym p) | H (sym p) | C_S (p x p) | C_T (p x p) | tau.
    const SymBlock m{p, p};
    const SymBlock h{p + m.count(), p};
    const Eigen::Index cs_off = h.offset + h.count();
    const Eigen::Index ct_off = cs_off + p * p;
    const Eigen::Index tau_idx = ct_off + p * p;
    Problem pb;
    pb.num_vars = tau_idx + 1;

    const Matrix m0 = start.point.second_moment();
    const double scale = std::max(m0.trace() / static_cast<double>(p), 1e-300);
    pb.objective = Vector::Zero(pb.num_vars);
    pb.objective(tau_idx) = -1.0 / scale;

    for (int k = 0; k < 2; ++k) {
        const MomentPair& center = k == 0 ? source : target;
        const double rho = k == 0 ? cfg.rho_s : cfg.rho_t;
        const Eigen::Index c_off = k == 0 ? cs_off : ct_off;

        // ||mu_k||² - 2 mu_kᵀ mu + tr(M + Sigma_k - 2 C_k) <= rho_k  (linear)
        Vector lin = Vector::Zero(pb.num_vars);
        lin.head(p) = -2.0 * center.mean;
        for (Eigen::Index i = 0; i < p; ++i) {
            lin(m.index(i, i)) = 1.0;
            lin(c_off + i * p + i) = -2.0;
        }
        const double constant = center.mean.squaredNorm() + center.cov.trace() - rho;
        ScalarInequality c;
        c.evaluate = [lin, constant, n = pb.num_vars](const Vector& x, double& value, Vector& grad, Matrix& hess) {
            value = constant + lin.dot(x);
            grad = lin;
            hess = Matrix::Zero(n, n);
            return true;
        };
        pb.scalar_constraints.push_back(std::move(c));

        // [[H, C_k], [C_kᵀ, Sigma_k]] >= 0
        MatrixInequality coupling = zero_inequality(2 * p);
        coupling.constant.bottomRightCorner(p, p) = center.cov;
        h.embed(coupling, 0, 0, 1.0);
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) {
                Matrix e = Matrix::Zero(2 * p, 2 * p);
                e(i, p + j) = e(p + j, i) = 1.0;
                coupling.add(c_off + i * p + j, std::move(e));
            }
        }
        pb.matrix_constraints.push_back(std::move(coupling));
    }

    // [[M - H, mu], [muᵀ, 1]] >= 0
    MatrixInequality border = zero_inequality(p + 1);
    border.constant(p, p) = 1.0;
    m.embed(border, 0, 0, 1.0);
    h.embed(border, 0, 0, -1.0);
    add_vector_border(border, 0, p);
    pb.matrix_constraints.push_back(std::move(border));

    add_common_constraints(pb, m, tau_idx, eps);

    // Strictly feasible start: H = (1 - s) Sigma0 and C_k a shrunk optimal coupling.
    const Matrix sigma0 = start.point.cov;
    const double abs_slack_s = cfg.rho_s - wasserstein_divergence(start.point, source);
    const double abs_slack_t = cfg.rho_t - wasserstein_divergence(start.point, target);
    Vector x0 = Vector::Zero(pb.num_vars);
    x0.head(p) = start.point.mean;
    m.write(m0, x0);
    x0(tau_idx) = 0.5 * schur_value(m0);

    auto fidelity = [&](const Matrix& hh, const Matrix& s) {
        const Matrix rh = psd_sqrt(hh);
        return psd_sqrt(symmetrize(rh * s * rh)).trace();
    };
    const double fid = std::max(fidelity(sigma0, source.cov), fidelity(sigma0, target.cov));
    double shrink = std::min(0.5, std::min(abs_slack_s, abs_slack_t) / (6.0 * std::max(fid, 1e-300)));
    bool ok = false;
    for (int attempt = 0; attempt < 40 && !ok; ++attempt, shrink *= 0.5) {
        const Matrix h0 = (1.0 - shrink) * sigma0;
        h.write(h0, x0);
        const Matrix rh = psd_sqrt(h0);
        const Matrix inv_rh = pd_inv_sqrt(h0);
        for (int k = 0; k < 2; ++k) {
            const Matrix& s = k == 0 ? source.cov : target.cov;
            const Matrix c = (1.0 - shrink) * rh * psd_sqrt(symmetrize(rh * s * rh)) * inv_rh;
            const Eigen::Index c_off = k == 0 ? cs_off : ct_off;
            for (Eigen::Index i = 0; i < p; ++i) {
                for (Eigen::Index j = 0; j < p; ++j) x0(c_off + i * p + j) = c(i, j);
            }
        }
        ok = pb.strictly_feasible(x0);
    }
    if (!ok) throw NumericError("could not construct a strictly feasible start for SI-WASS");

    const barrier::Result res = backend.solve(pb, x0, barrier_options(cfg));

    SiSolution sol;
    sol.mu = res.x.head(p);
    sol.big_m = m.read(res.x);
    sol.h = h.read(res.x);
    Matrix cs(p, p);
    Matrix ct(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            cs(i, j) = res.x(cs_off + i * p + j);
            ct(i, j) = res.x(ct_off + i * p + j);
        }
    }
    sol.c_source = cs;
    sol.c_target = ct;
    sol.tau = schur_value(sol.big_m);
    sol.beta.beta = beta_from_second_moment(sol.big_m);
    std::ostringstream label;
    label << "SI-WASS rho_s=" << cfg.rho_s << " rho_t=" << cfg.rho_t;
    sol.beta.provenance = label.str();
    sol.kkt_residual = res.gap_bound * scale;
    const MembershipReport rep = check_membership(sol.mu, sol.big_m - sol.mu * sol.mu.transpose(), source_in,
                                                  target_in, cfg, DivergenceKind::WassersteinType);
    sol.converged = res.converged && rep.member;
    return sol;
}

SiSolution solve_si(DivergenceKind kind, const MomentPair& source, const MomentPair& target, const SiConfig& cfg) {
    return kind == DivergenceKind::KlType ? solve_si_kl(source, target, cfg) : solve_si_wasserstein(source, target, cfg);
}

}  // namespace drda
