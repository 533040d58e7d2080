#pragma once

#include "drda/types.hpp"

namespace drda {

struct InterpolationResult {
    double lambda = 0.0;
    MomentPair moments;
};

/// Minimizer of lambda * D(. || source) + (1 - lambda) * D(. || target)
/// (information-form fusion). lambda = 1 returns the source, 0 the target.
MomentPair kl_barycenter(const MomentPair& source, const MomentPair& target, double lambda);

/// McCann interpolant between the Gaussians: lambda = 1 is the source,
/// lambda = 0 the target. Only the source covariance needs to be PD.
MomentPair wasserstein_barycenter(const MomentPair& source, const MomentPair& target, double lambda);

MomentPair barycenter(DivergenceKind kind, const MomentPair& source, const MomentPair& target, double lambda);

/// Point at fraction `a` along the constant-speed Wasserstein geodesic from
/// source (a = 0) to target (a = 1).
MomentPair wasserstein_geodesic(const MomentPair& source, const MomentPair& target, double a);

/// Smallest target radius making the Wasserstein SI set non-empty:
/// max(0, sqrt(W(source, target)) - sqrt(rho_s))².
double min_radius_wasserstein(const MomentPair& source, const MomentPair& target, double rho_s);

/// The gamma-family of KL barycenters used by the minimum-radius search:
/// Sigma = (1 + gamma) (gamma Sigma_S⁻¹ + Sigma_T⁻¹)⁻¹,
/// mu = Sigma (gamma Sigma_S⁻¹ mu_S + Sigma_T⁻¹ mu_T) / (1 + gamma).
MomentPair kl_gamma_moments(const MomentPair& source, const MomentPair& target, double gamma);

struct KlRadiusResult {
    double gamma = 0.0;     // maximizer of the one-dimensional dual
    double radius = 0.0;    // D(witness || target)
    MomentPair witness;     // (mu_gamma, Sigma_gamma), lies in both balls
};

/// Maximizes gamma D(m_gamma || S) + D(m_gamma || T) - gamma rho_s over
/// gamma >= 0 by bisection on the slope D(m_gamma || S) - rho_s. The bracket
/// starts at [0, 1] and doubles up to 2^30. Returns the witness too.
KlRadiusResult min_radius_kl_detail(const MomentPair& source, const MomentPair& target, double rho_s,
                                    double tol = 1e-10);

double min_radius_kl(const MomentPair& source, const MomentPair& target, double rho_s, double tol = 1e-10);

}  // namespace drda
