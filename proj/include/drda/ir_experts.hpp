#pragma once

#include "drda/types.hpp"

#include <optional>

namespace drda {

/// Solution of the one-dimensional dual behind the KL worst-case loss.
struct KlWorstCase {
    double value = 0.0;       // sup of E[(betaᵀx - y)²] over the KL ball
    double kappa_star = 0.0;  // dual multiplier
    double omega1 = 0.0;      // wᵀ Sigma w
    double omega2 = 0.0;      // (wᵀ mu)²
};

/// Same dual, in terms of the reduced scalars only. rho > 0, omega1 > 0.
/// kappa solves
///   rho = omega1 omega2 / (kappa - omega1)² + omega1 / (kappa - omega1) + log(1 - omega1 / kappa)
/// and value = kappa rho + kappa omega2 / (kappa - omega1) - kappa log(1 - omega1 / kappa).
KlWorstCase kl_worst_case_reduced(double omega1, double omega2, double rho);

/// Upper end of the kappa bracket obtained by dropping the log term from the
/// root equation: omega1 (1 + 2 rho + sqrt(1 + 4 rho omega2 / omega1)) / (2 rho).
double kl_kappa_upper_bound(double omega1, double omega2, double rho);

KlWorstCase kl_worst_case(const Vector& beta, const MomentPair& center, double rho);

/// Gradient of the KL worst-case loss with respect to beta.
Vector kl_worst_case_gradient(const Vector& beta, const MomentPair& center, double rho);

/// The unique maximizing moments: Sigma* = kappa (kappa Sigma⁻¹ - wwᵀ)⁻¹,
/// mu* = Sigma* Sigma⁻¹ mu. The KL constraint is active at (mu*, Sigma*).
MomentPair kl_worst_case_moments(const Vector& beta, const MomentPair& center, double rho);

/// (sqrt(wᵀ M w) + sqrt(rho) ||w||)² with M the center's second-moment matrix.
double wasserstein_worst_case(const Vector& beta, const MomentPair& center, double rho);

struct IrOptions {
    int max_iters = 5000;
    double grad_tol = 1e-6;
    std::optional<Vector> init;  // defaults to the center's least-squares solution
};

struct IrSolution {
    Expert expert;
    bool converged = false;
    int iterations = 0;
    double objective = 0.0;  // worst-case expected square loss at expert.beta
    double residual = 0.0;   // gradient norm at expert.beta
};

/// argmin_beta M_xx beta = M_xy for the center's second-moment matrix M.
Vector least_squares_on_moments(const MomentPair& center);

/// Minimizes the KL worst-case loss with the adaptive step-size gradient
/// method (Malitsky & Mishchenko); ill-conditioned centers that stall it are
/// finished with damped Newton steps on a finite-difference Hessian.
IrSolution solve_ir_kl(const MomentPair& center, double rho, const IrOptions& opts = {});

/// Minimizes ||M^½ w|| + sqrt(rho) ||w||. The minimizer is a ridge solution
/// whose penalty solves a scalar equation, found by bisection; only
/// opts.max_iters is used. residual is the smooth gradient norm, which need
/// not vanish when the optimum sits where M^½ w = 0.
IrSolution solve_ir_wasserstein(const MomentPair& center, double rho, IrOptions opts = {5000, 1e-8, std::nullopt});

}  // namespace drda
