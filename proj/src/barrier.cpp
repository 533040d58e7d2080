#include "drda/barrier.hpp"

#include "drda/moments.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace drda::barrier {

Matrix MatrixInequality::evaluate(const Vector& x) const {
    Matrix a = constant;
    for (const auto& [var, coeff] : terms) a += x(var) * coeff;
    return a;
}

double Problem::barrier_degree() const {
    double nu = static_cast<double>(scalar_constraints.size());
    for (const auto& c : matrix_constraints) nu += static_cast<double>(c.constant.rows());
    return nu;
}

bool Problem::strictly_feasible(const Vector& x) const {
    for (const auto& c : matrix_constraints) {
        if (!is_positive_definite(c.evaluate(x))) return false;
    }
    double value = 0.0;
    Vector grad;
    Matrix hess;
    for (const auto& c : scalar_constraints) {
        if (!c.evaluate(x, value, grad, hess) || !(value < 0.0)) return false;
    }
    return true;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Barrier function value only; +inf outside the domain.
double barrier_value(const Problem& pb, const Vector& x, double weight) {
    double phi = weight * pb.objective.dot(x);
    for (const auto& c : pb.matrix_constraints) {
        Eigen::LLT<Matrix> llt(c.evaluate(x));
        if (llt.info() != Eigen::Success) return kInf;
        const Matrix& l = llt.matrixLLT();
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            if (!(l(i, i) > 0.0)) return kInf;
            phi -= 2.0 * std::log(l(i, i));
        }
    }
    double value = 0.0;
    Vector grad;
    Matrix hess;
    for (const auto& c : pb.scalar_constraints) {
        if (!c.evaluate(x, value, grad, hess) || !(value < 0.0)) return kInf;
        phi -= std::log(-value);
    }
    return std::isfinite(phi) ? phi : kInf;
}

// Gradient and Hessian of the barrier function; x must be in the domain.
void barrier_derivatives(const Problem& pb, const Vector& x, double weight, Vector& g, Matrix& h) {
    const Eigen::Index n = pb.num_vars;
    g = weight * pb.objective;
    h = Matrix::Zero(n, n);

    for (const auto& c : pb.matrix_constraints) {
        const Eigen::Index m = c.constant.rows();
        const Eigen::Index k = static_cast<Eigen::Index>(c.terms.size());
        Eigen::LLT<Matrix> llt(c.evaluate(x));
        // Columns hold vec(A⁻¹ T_i) and vec((A⁻¹ T_i)ᵀ), so that
        // tr(A⁻¹ T_i A⁻¹ T_j) = vec(B_i)ᵀ vec(B_jᵀ).
        Matrix b(m * m, k);
        Matrix bt(m * m, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            const Matrix bi = llt.solve(c.terms[i].second);
            b.col(i) = Eigen::Map<const Vector>(bi.data(), m * m);
            const Matrix bit = bi.transpose();
            bt.col(i) = Eigen::Map<const Vector>(bit.data(), m * m);
            g(c.terms[i].first) -= bi.trace();
        }
        const Matrix local = b.transpose() * bt;
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
                h(c.terms[i].first, c.terms[j].first) += local(i, j);
            }
        }
    }

    double value = 0.0;
    Vector cg;
    Matrix ch;
    for (const auto& c : pb.scalar_constraints) {
        c.evaluate(x, value, cg, ch);
        const double slack = -value;
        g += cg / slack;
        h += ch / slack + cg * cg.transpose() / (slack * slack);
    }
    h = symmetrize(h);
}

}  // namespace

Result LogBarrierSolver::solve(const Problem& pb, const Vector& start, const Options& opts) const {
    if (start.size() != pb.num_vars) throw NumericError("barrier start has wrong dimension");
    if (!pb.strictly_feasible(start)) throw NumericError("barrier start is not strictly feasible");

    const double nu = pb.barrier_degree();
    Result res;
    res.x = start;
    Vector& x = res.x;

    double mu = opts.mu_start;
    bool stage_ok = true;
    while (true) {
        const double weight = 1.0 / mu;
        double phi = barrier_value(pb, x, weight);
        stage_ok = false;
        for (int step = 0; step < opts.max_newton_steps; ++step) {
            Vector g;
            Matrix h;
            barrier_derivatives(pb, x, weight, g, h);
            // Jacobi scaling, then a tiny ridge on the unit diagonal. Constraint
            // curvatures span many orders of magnitude when a ball is small.
            const Vector dscale = h.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
            Matrix hs = dscale.asDiagonal() * h * dscale.asDiagonal();
            hs.diagonal().array() += 1e-14;
            Eigen::LDLT<Matrix> ldlt(hs);
            Vector dx = -(dscale.asDiagonal() * ldlt.solve(dscale.asDiagonal() * g));
            if (!dx.allFinite() || dx.dot(g) >= 0.0) dx = -g / std::max(1.0, h.diagonal().maxCoeff());
            const double decrement = -g.dot(dx);
            ++res.newton_steps;
            if (decrement * 0.5 <= opts.decrement_tol) {
                stage_ok = true;
                break;
            }

            double t = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
                const Vector trial = x + t * dx;
                const double pt = barrier_value(pb, trial, weight);
                if (pt <= phi - 0.25 * t * decrement) {
                    x = trial;
                    phi = pt;
                    moved = true;
                    break;
                }
            }
            if (!moved) {
                // Centering has hit round-off; the current iterate is as good as it gets.
                stage_ok = decrement < 1e-4;
                break;
            }
            // Inside the quadratic region a full step always passes the test above,
            // so a shortened step at a small decrement means round-off in phi.
            if (t < 1.0 && decrement < std::max(1e-6, 1e-10 * std::abs(phi))) {
                stage_ok = true;
                break;
            }
        }
        res.gap_bound = nu * mu;
        if (mu <= opts.mu_final * (1.0 + 1e-12) || !stage_ok) break;
        mu = std::max(mu / opts.mu_factor, opts.mu_final);
    }
    res.converged = stage_ok && res.gap_bound <= opts.opt_tol;
    return res;
}

std::unique_ptr<SolverBackend> default_backend() {
    return std::make_unique<LogBarrierSolver>();
}

}  // namespace drda::barrier
