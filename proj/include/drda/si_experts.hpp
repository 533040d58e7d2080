#pragma once

#include "drda/barrier.hpp"
#include "drda/types.hpp"

#include <optional>

namespace drda {

struct SiConfig {
    double rho_s = 0.0;
    double rho_t = 0.0;
    std::optional<double> epsilon;  // floor on the second-moment matrix; see default_si_epsilon
    double feas_tol = 1e-6;
    double opt_tol = 1e-6;
    int max_iters = 200;            // Newton steps per barrier stage
};

/// 1e-6 * tr(Sigma_T + mu_T mu_Tᵀ) / p.
double default_si_epsilon(const MomentPair& target);

struct MembershipReport {
    bool member = false;
    double source_residual = 0.0;  // psi(. || source) - rho_s
    double target_residual = 0.0;  // psi(. || target) - rho_t
    double floor_residual = 0.0;   // epsilon - lambda_min(Sigma + mu muᵀ)
};

/// Whether (mu, sigma) lies in the intersection of the two divergence balls
/// and satisfies the epsilon floor, each up to cfg.feas_tol.
MembershipReport check_membership(const Vector& mu, const Matrix& sigma, const MomentPair& source,
                                  const MomentPair& target, const SiConfig& cfg, DivergenceKind kind);

struct SiSolution {
    Expert beta;
    Vector mu;
    Matrix big_m;   // worst-case second-moment matrix Sigma + mu muᵀ
    double tau = 0.0;
    // Auxiliary blocks: t for the KL program; H, C_S, C_T for the Wasserstein one.
    std::optional<double> t;
    std::optional<Matrix> h;
    std::optional<Matrix> c_source;
    std::optional<Matrix> c_target;
    bool converged = false;
    double kkt_residual = 0.0;
};

/// M_yy - M_xyᵀ M_xx⁻¹ M_xy, the least-squares loss attained by the best beta.
double schur_value(const Matrix& big_m);

/// M_xx⁻¹ M_xy.
Vector beta_from_second_moment(const Matrix& big_m);

SiSolution solve_si_kl(const MomentPair& source, const MomentPair& target, const SiConfig& cfg,
                       const barrier::SolverBackend& backend = barrier::LogBarrierSolver{});

SiSolution solve_si_wasserstein(const MomentPair& source, const MomentPair& target, const SiConfig& cfg,
                                const barrier::SolverBackend& backend = barrier::LogBarrierSolver{});

SiSolution solve_si(DivergenceKind kind, const MomentPair& source, const MomentPair& target, const SiConfig& cfg);

}  // namespace drda
