#include "drda/interpolation.hpp"

#include "drda/moments.hpp"

#include <algorithm>
#include <cmath>

namespace drda {

namespace {

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw NumericError("interpolation weight outside [0, 1]");
}

// Optimal transport map between N(., source.cov) and N(., target.cov):
// the symmetric L with L Sigma_S L = Sigma_T. Written in the form that only
// inverts Sigma_S, which is equal to Sigma_T^½ (Sigma_T^½ Sigma_S Sigma_T^½)^-½ Sigma_T^½
// whenever both are PD.
Matrix transport_map(const Matrix& source_cov, const Matrix& target_cov) {
    const Matrix root_s = psd_sqrt(source_cov);
    const Matrix inv_root_s = pd_inv_sqrt(source_cov);
    const Matrix middle = psd_sqrt(symmetrize(root_s * target_cov * root_s));
    return symmetrize(inv_root_s * middle * inv_root_s);
}

}  // namespace

MomentPair kl_barycenter(const MomentPair& source, const MomentPair& target, double lambda) {
    check_lambda(lambda);
    if (lambda == 1.0) return source;
    if (lambda == 0.0) return target;
    const Matrix prec_s = inverse_pd(source.cov);
    const Matrix prec_t = inverse_pd(target.cov);
    const Matrix prec = symmetrize(lambda * prec_s + (1.0 - lambda) * prec_t);
    const Matrix cov = inverse_pd(prec);
    const Vector mean = cov * (lambda * prec_s * source.mean + (1.0 - lambda) * prec_t * target.mean);
    return {mean, cov};
}

MomentPair wasserstein_barycenter(const MomentPair& source, const MomentPair& target, double lambda) {
    check_lambda(lambda);
    if (lambda == 1.0) return source;
    if (!is_positive_definite(source.cov)) throw NumericError("source covariance not positive definite");
    const Eigen::Index p = source.dim();
    const Matrix l = transport_map(source.cov, target.cov);
    const Matrix step = lambda * Matrix::Identity(p, p) + (1.0 - lambda) * l;
    const Matrix cov = symmetrize(step * source.cov * step);
    const Vector mean = lambda * source.mean + (1.0 - lambda) * target.mean;
    return {mean, cov};
}

MomentPair barycenter(DivergenceKind kind, const MomentPair& source, const MomentPair& target, double lambda) {
    return kind == DivergenceKind::KlType ? kl_barycenter(source, target, lambda)
                                          : wasserstein_barycenter(source, target, lambda);
}

MomentPair wasserstein_geodesic(const MomentPair& source, const MomentPair& target, double a) {
    return wasserstein_barycenter(source, target, 1.0 - a);
}

double min_radius_wasserstein(const MomentPair& source, const MomentPair& target, double rho_s) {
    if (!(rho_s > 0.0)) throw NumericError("rho_s must be positive");
    const double gap = std::sqrt(wasserstein_divergence(source, target)) - std::sqrt(rho_s);
    return gap > 0.0 ? gap * gap : 0.0;
}

MomentPair kl_gamma_moments(const MomentPair& source, const MomentPair& target, double gamma) {
    if (gamma < 0.0) throw NumericError("gamma must be nonnegative");
    // (1+gamma)(gamma P_S + P_T)⁻¹ is the lambda = gamma/(1+gamma) barycenter.
    return kl_barycenter(source, target, gamma / (1.0 + gamma));
}

KlRadiusResult min_radius_kl_detail(const MomentPair& source, const MomentPair& target, double rho_s,
                                    double tol) {
    if (!(rho_s > 0.0)) throw NumericError("rho_s must be positive");
    if (!(tol > 0.0)) throw NumericError("tolerance must be positive");
    if (!is_positive_definite(source.cov) || !is_positive_definite(target.cov)) {
        throw NumericError("covariance not positive definite");
    }

    // d/dgamma of the dual is D(m_gamma || S) - rho_s, nonincreasing in gamma.
    auto slope = [&](double gamma) { return kl_divergence(kl_gamma_moments(source, target, gamma), source) - rho_s; };

    KlRadiusResult out;
    if (slope(0.0) <= 0.0) {
        out.gamma = 0.0;
        out.witness = target;
        out.radius = 0.0;
        return out;
    }

    constexpr double kCap = 1152921504606846976.0;  // 2^60
    double lo = 0.0;
    double hi = 1.0;
    while (hi < kCap && slope(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
    }
    if (hi >= kCap && slope(kCap) > 0.0) {
        lo = hi = kCap;
    }
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (slope(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // hi has slope <= 0, so the witness sits inside the source ball.
    out.gamma = hi;
    out.witness = kl_gamma_moments(source, target, hi);
    out.radius = kl_divergence(out.witness, target);
    return out;
}

double min_radius_kl(const MomentPair& source, const MomentPair& target, double rho_s, double tol) {
    return min_radius_kl_detail(source, target, rho_s, tol).radius;
}

}  // namespace drda
