#include "drda/ir_experts.hpp"

#include "drda/moments.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace drda {

namespace {

// x - log(1 + x) without cancellation for small x.
double x_minus_log1p(double x) {
    if (std::abs(x) < 1e-2) {
        double term = x * x;
        double sum = 0.0;
        for (int k = 2; k < 14; ++k) {
            sum += (k % 2 == 0 ? 1.0 : -1.0) * term / k;
            term *= x;
        }
        return sum;
    }
    return x - std::log1p(x);
}

// Root equation in the variable x = omega1 / (kappa - omega1) > 0:
//   r(x) = a x² + x - log(1 + x) - rho,  a = omega2 / omega1.
// r is strictly increasing with r(0) = -rho.
double solve_ratio(double a, double rho) {
    auto residual = [&](double x) { return a * x * x + x_minus_log1p(x) - rho; };
    auto slope = [&](double x) { return 2.0 * a * x + x / (1.0 + x); };

    // a x² + x = rho gives the kappa upper bound; r is negative there.
    double lo = 2.0 * rho / (1.0 + std::sqrt(1.0 + 4.0 * rho * a));
    double hi = std::max(2.0 * lo, 1.0);
    while (residual(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw NumericError("kappa bracket diverged");
    }

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        const double r = residual(x);
        if (r == 0.0) return x;
        if (r < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        if (std::abs(r) <= 1e-13 * std::max(1.0, rho) && hi - lo <= 1e-12 * hi) break;
        // Newton step, kept strictly inside the bracket; bisect otherwise.
        const double newton = x - r / slope(x);
        x = (newton > lo && newton < hi) ? newton : 0.5 * (lo + hi);
        if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
    }
    return x;
}

void check_center(const MomentPair& center, Eigen::Index d) {
    if (center.dim() != d + 1) throw NumericError("beta length does not match center dimension");
}

}  // namespace

KlWorstCase kl_worst_case_reduced(double omega1, double omega2, double rho) {
    if (!(rho > 0.0)) throw NumericError("KL radius must be positive");
    if (!(omega1 > 0.0)) throw NumericError("wᵀ Sigma w must be positive");
    const double a = omega2 / omega1;
    const double x = solve_ratio(a, rho);
    KlWorstCase out;
    out.omega1 = omega1;
    out.omega2 = omega2;
    out.kappa_star = omega1 + omega1 / x;
    // kappa (rho + omega2 / (kappa - omega1) + log(kappa / (kappa - omega1)))
    out.value = out.kappa_star * (rho + a * x + std::log1p(x));
    return out;
}

double kl_kappa_upper_bound(double omega1, double omega2, double rho) {
    return omega1 * (1.0 + 2.0 * rho + std::sqrt(1.0 + 4.0 * rho * omega2 / omega1)) / (2.0 * rho);
}

KlWorstCase kl_worst_case(const Vector& beta, const MomentPair& center, double rho) {
    check_center(center, beta.size());
    if (!is_positive_definite(center.cov)) throw NumericError("covariance not positive definite");
    const Vector w = augment(beta);
    const double omega1 = w.dot(center.cov * w);
    const double proj = w.dot(center.mean);
    return kl_worst_case_reduced(omega1, proj * proj, rho);
}

Vector kl_worst_case_gradient(const Vector& beta, const MomentPair& center, double rho) {
    const KlWorstCase wc = kl_worst_case(beta, center, rho);
    const Vector w = augment(beta);
    const double gap = wc.kappa_star - wc.omega1;
    const Vector sigma_w = center.cov * w;
    const Vector second_w = sigma_w + center.mean * center.mean.dot(w);
    // 2 kappa (omega2 Sigma w + (kappa - omega1) M w) / (kappa - omega1)²
    const Vector full = 2.0 * wc.kappa_star * (wc.omega2 / (gap * gap) * sigma_w + second_w / gap);
    return full.head(beta.size());
}

MomentPair kl_worst_case_moments(const Vector& beta, const MomentPair& center, double rho) {
    const KlWorstCase wc = kl_worst_case(beta, center, rho);
    const Vector w = augment(beta);
    const double gap = wc.kappa_star - wc.omega1;
    const Vector sigma_w = center.cov * w;
    // Sherman-Morrison form of kappa (kappa Sigma⁻¹ - wwᵀ)⁻¹.
    MomentPair out;
    out.cov = symmetrize(center.cov + sigma_w * sigma_w.transpose() / gap);
    out.mean = center.mean + sigma_w * (w.dot(center.mean) / gap);
    return out;
}

double wasserstein_worst_case(const Vector& beta, const MomentPair& center, double rho) {
    check_center(center, beta.size());
    if (rho < 0.0) throw NumericError("Wasserstein radius must be nonnegative");
    const Vector w = augment(beta);
    const double quad = std::max(0.0, w.dot(center.second_moment() * w));
    if (rho == 0.0) return quad;
    const double root = std::sqrt(quad) + std::sqrt(rho) * w.norm();
    return root * root;
}

Vector least_squares_on_moments(const MomentPair& center) {
    const Eigen::Index d = center.dim() - 1;
    const Matrix m = center.second_moment();
    Eigen::LDLT<Matrix> ldlt(m.topLeftCorner(d, d));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericError("singular second-moment block");
    }
    return ldlt.solve(m.topRightCorner(d, 1));
}

namespace {

template <class Objective, class Gradient, class Hessian>
bool newton_minimize(Vector& beta, const Objective& f, const Gradient& grad, const Hessian& hess, double tol,
                     int max_iters, int& iters) {
    double fx = f(beta);
    for (int it = 0; it < max_iters; ++it, ++iters) {
        const Vector g = grad(beta);
        if (g.norm() <= tol) return true;
        const Matrix h = symmetrize(hess(beta));
        Eigen::LDLT<Matrix> ldlt(h);
        Vector dir;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            dir = -ldlt.solve(g);
        }
        if (dir.size() == 0 || !dir.allFinite() || dir.dot(g) >= 0.0) dir = -g;

        double step = 1.0;
        const double slope = g.dot(dir);
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            const Vector trial = beta + step * dir;
            const double ft = f(trial);
            if (std::isfinite(ft) && ft <= fx + 1e-4 * step * slope) {
                beta = trial;
                fx = ft;
                moved = true;
                break;
            }
        }
        if (!moved) {
            // Line search exhausted: stationary, or the predicted decrease is below round-off in f.
            return grad(beta).norm() <= tol || -slope <= 1e-13 * std::max(1.0, std::abs(fx));
        }
    }
    return grad(beta).norm() <= tol;
}

}  // namespace

IrSolution solve_ir_kl(const MomentPair& center, double rho, const IrOptions& opts) {
    if (!(rho > 0.0)) throw NumericError("KL radius must be positive");
    if (!is_positive_definite(center.cov)) throw NumericError("covariance not positive definite");
    const Eigen::Index d = center.dim() - 1;

    auto f = [&](const Vector& b) { return kl_worst_case(b, center, rho).value; };
    auto grad = [&](const Vector& b) { return kl_worst_case_gradient(b, center, rho); };

    Vector x_prev = opts.init ? *opts.init : least_squares_on_moments(center);
    if (x_prev.size() != d) throw NumericError("initial point has wrong length");

    IrSolution sol;
    Vector g_prev = grad(x_prev);
    Vector best = x_prev;
    double best_norm = g_prev.norm();

    // Adaptive gradient descent: step_k = min(sqrt(1 + theta) step_{k-1},
    // ||x_k - x_{k-1}|| / (2 ||g_k - g_{k-1}||)), theta = step_k / step_{k-1}.
    double step_prev = 1e-6 / std::max(1.0, g_prev.norm());
    double theta = std::numeric_limits<double>::infinity();
    Vector x = x_prev - step_prev * g_prev;
    int it = 0;
    for (; it < opts.max_iters && best_norm > opts.grad_tol; ++it) {
        const Vector g = grad(x);
        const double gn = g.norm();
        if (gn < best_norm) {
            best_norm = gn;
            best = x;
        }
        if (gn <= opts.grad_tol) break;
        const double dx = (x - x_prev).norm();
        const double dg = (g - g_prev).norm();
        double step = std::sqrt(1.0 + theta) * step_prev;
        if (dg > 0.0) step = std::min(step, dx / (2.0 * dg));
        if (!(step > 0.0) || !std::isfinite(step)) break;
        theta = step / step_prev;
        step_prev = step;
        x_prev = x;
        g_prev = g;
        x = x - step * g;
    }
    sol.iterations = it;

    Vector beta = best;
    bool converged = best_norm <= opts.grad_tol;
    if (!converged) {
        auto hess = [&](const Vector& b) {
            Matrix h(d, d);
            for (Eigen::Index i = 0; i < d; ++i) {
                const double hstep = 1e-6 * std::max(1.0, std::abs(b(i)));
                Vector up = b;
                Vector dn = b;
                up(i) += hstep;
                dn(i) -= hstep;
                h.col(i) = (grad(up) - grad(dn)) / (2.0 * hstep);
            }
            return h;
        };
        converged = newton_minimize(beta, f, grad, hess, opts.grad_tol, 100, sol.iterations);
    }

    sol.expert.beta = beta;
    sol.expert.provenance = "IR-KL rho=" + std::to_string(rho);
    sol.objective = f(beta);
    sol.residual = grad(beta).norm();
    sol.converged = converged;
    return sol;
}

IrSolution solve_ir_wasserstein(const MomentPair& center, double rho, IrOptions opts) {
    if (rho < 0.0) throw NumericError("Wasserstein radius must be nonnegative");
    const Eigen::Index d = center.dim() - 1;
    const Matrix m = center.second_moment();
    const Matrix mxx = m.topLeftCorner(d, d);
    const Vector mxy = m.topRightCorner(d, 1);
    const double root_rho = std::sqrt(rho);

    // Stationarity reads (M_xx + lambda I) beta = M_xy with
    // lambda = sqrt(rho) ||M^½ w|| / ||w||, so the minimizer is the ridge
    // solution at the root of phi(lambda) = lambda ||w|| - sqrt(rho) ||M^½ w||.
    // phi(0) <= 0 and phi grows without bound, so bisection brackets it.
    auto ridge_at = [&](double lambda, Vector& beta) {
        Matrix a = mxx;
        a.diagonal().array() += lambda;
        Eigen::LDLT<Matrix> ldlt(a);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
        beta = ldlt.solve(mxy);
        return beta.allFinite();
    };
    auto phi = [&](double lambda, Vector& beta) {
        if (!ridge_at(lambda, beta)) return -std::numeric_limits<double>::infinity();
        const Vector w = augment(beta);
        return lambda * w.norm() - root_rho * std::sqrt(std::max(0.0, w.dot(m * w)));
    };

    IrSolution sol;
    const double scale = std::max(mxx.trace() / static_cast<double>(std::max<Eigen::Index>(d, 1)),
                                  std::numeric_limits<double>::min());
    const double floor = 1e-14 * scale;
    Vector beta;
    double hi = scale;
    while (!(phi(hi, beta) > 0.0) && hi < 1e300) {
        hi *= 4.0;
        ++sol.iterations;
    }
    double lo = hi;
    bool bracketed = false;
    while (lo > floor) {
        lo = std::max(0.25 * lo, floor);
        ++sol.iterations;
        if (!(phi(lo, beta) > 0.0)) {
            bracketed = true;
            break;
        }
    }
    double lambda = lo;
    if (bracketed) {
        while (hi > lo * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()) && sol.iterations < opts.max_iters) {
            const double mid = std::sqrt(lo * hi);
            ++sol.iterations;
            (phi(mid, beta) > 0.0 ? hi : lo) = mid;
        }
        lambda = hi;
    }
    // Unbracketed means the root lies below round-off: the least-squares end.
    const bool solved = ridge_at(lambda, beta);
    if (!solved) beta = Vector::Zero(d);

    sol.converged = solved && hi < 1e300 && sol.iterations < opts.max_iters;
    sol.expert.beta = beta;
    sol.expert.provenance = "IR-WASS rho=" + std::to_string(rho);
    sol.objective = wasserstein_worst_case(beta, center, rho);
    const Vector w = augment(beta);
    const Vector mw = m * w;
    const double q = std::sqrt(std::max(w.dot(mw), std::numeric_limits<double>::min()));
    sol.residual = (mw / q + root_rho * w / w.norm()).head(d).norm();
    return sol;
}

}  // namespace drda
