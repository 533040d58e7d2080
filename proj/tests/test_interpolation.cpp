#include "drda/interpolation.hpp"
#include "drda/moments.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace drda;
using testing_support::Gen;

namespace {

MomentPair iso(double m0, double m1, double c) {
    return {(Vector(2) << m0, m1).finished(), c * Matrix::Identity(2, 2)};
}

// The transport map written around the target covariance.
Matrix target_form_map(const Matrix& ss, const Matrix& st) {
    const Matrix rt = psd_sqrt(st);
    return rt * pd_inv_sqrt(symmetrize(rt * ss * rt)) * rt;
}

// lambda-weighted Lagrangian of the minimum-radius problem, maximized by grid search.
double dual_value(const MomentPair& s, const MomentPair& t, double rho_s, double gamma) {
    const MomentPair m = kl_gamma_moments(s, t, gamma);
    return gamma * kl_divergence(m, s) + kl_divergence(m, t) - gamma * rho_s;
}

}  // namespace

TEST_CASE("KL barycenter endpoints and midpoint") {
    Gen g(1);
    const MomentPair s = g.moments(3);
    const MomentPair t = g.moments(3);
    const MomentPair at1 = kl_barycenter(s, t, 1.0);
    const MomentPair at0 = kl_barycenter(s, t, 0.0);
    CHECK(at1.mean == s.mean);
    CHECK(at1.cov == s.cov);
    CHECK(at0.mean == t.mean);
    CHECK(at0.cov == t.cov);

    const MomentPair mid = kl_barycenter(iso(0, 0, 1), iso(2, 0, 1), 0.5);
    CHECK((mid.mean - Eigen::Vector2d(1, 0)).norm() < 1e-14);
    CHECK((mid.cov - Matrix::Identity(2, 2)).norm() < 1e-14);

    MomentPair bad = iso(0, 0, 0);
    CHECK_THROWS_AS(kl_barycenter(bad, iso(0, 0, 1), 0.5), NumericError);
}

TEST_CASE("KL barycenter satisfies first-order conditions") {
    Gen g(2);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index p = g.integer(1, 5);
        const MomentPair s = g.moments(p);
        const MomentPair t = g.moments(p);
        const double lambda = g.uniform(0.0, 1.0);
        const MomentPair b = kl_barycenter(s, t, lambda);
        const Matrix ps = inverse_pd(s.cov);
        const Matrix pt = inverse_pd(t.cov);
        CHECK((lambda * ps * (b.mean - s.mean) + (1 - lambda) * pt * (b.mean - t.mean)).norm() <= 1e-8);
        CHECK((lambda * ps + (1 - lambda) * pt - inverse_pd(b.cov)).norm() <= 1e-8);
        CHECK(is_positive_definite(b.cov));
    }
}

TEST_CASE("Wasserstein barycenter") {
    const MomentPair b = wasserstein_barycenter(iso(0, 0, 1), iso(0, 0, 4), 0.5);
    CHECK(b.mean.norm() == 0.0);
    CHECK((b.cov - 2.25 * Matrix::Identity(2, 2)).norm() < 1e-12);

    Gen g(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index p = g.integer(1, 5);
        const MomentPair s = g.moments(p);
        const MomentPair t = g.moments(p);
        const MomentPair at1 = wasserstein_barycenter(s, t, 1.0);
        CHECK((at1.cov - s.cov).norm() <= 1e-10);
        const MomentPair at0 = wasserstein_barycenter(s, t, 0.0);
        CHECK((at0.mean - t.mean).norm() <= 1e-8);
        CHECK((at0.cov - t.cov).norm() <= 1e-8);

        // Agrees with the map written around the target covariance.
        const double lambda = g.uniform(0.0, 1.0);
        const Matrix l = target_form_map(s.cov, t.cov);
        const Matrix a = lambda * Matrix::Identity(p, p) + (1 - lambda) * l;
        CHECK((wasserstein_barycenter(s, t, lambda).cov - a * s.cov * a).norm() <= 1e-8 * (1 + s.cov.norm()));

        // Constant-speed geodesic.
        const MomentPair m = wasserstein_barycenter(s, t, lambda);
        const double lhs = std::sqrt(wasserstein_divergence(m, s)) + std::sqrt(wasserstein_divergence(m, t));
        CHECK(lhs == doctest::Approx(std::sqrt(wasserstein_divergence(s, t))).epsilon(1e-6));
    }
}

TEST_CASE("Wasserstein minimum radius and witness") {
    // W = 4 (mean distance 2) with rho_s = 1 gives 1; W = 9 with rho_s = 4 gives 1.
    CHECK(min_radius_wasserstein(iso(0, 0, 1), iso(2, 0, 1), 1.0) == doctest::Approx(1.0));
    CHECK(min_radius_wasserstein(iso(0, 0, 1), iso(3, 0, 1), 4.0) == doctest::Approx(1.0));
    CHECK(min_radius_wasserstein(iso(0, 0, 1), iso(2, 0, 1), 4.0) == 0.0);
    CHECK(min_radius_wasserstein(iso(0, 0, 1), iso(2, 0, 1), 5.0) == 0.0);

    Gen g(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index p = g.integer(1, 4);
        const MomentPair s = g.moments(p);
        const MomentPair t = g.moments(p);
        const double w = wasserstein_divergence(s, t);
        const double rho_s = g.uniform(0.01, 0.9) * w;
        const double rho_t = min_radius_wasserstein(s, t, rho_s);
        const MomentPair witness = wasserstein_geodesic(s, t, std::sqrt(rho_s / w));
        CHECK(wasserstein_divergence(witness, s) <= rho_s + 1e-8);
        CHECK(wasserstein_divergence(witness, t) <= rho_t + 1e-8);
    }
}

TEST_CASE("KL minimum radius") {
    Gen g(5);
    SUBCASE("identical moments give zero") {
        const MomentPair s = g.moments(3);
        for (double rho : {1e-6, 0.1, 10.0}) CHECK(min_radius_kl(s, s, rho) <= 1e-8);
    }
    SUBCASE("target inside the source ball gives zero") {
        const MomentPair s = g.moments(2);
        MomentPair t = s;
        t.mean(0) += 0.1;
        CHECK(min_radius_kl(s, t, 10.0 * kl_divergence(t, s)) == 0.0);
    }
    SUBCASE("grid oracle and witness membership") {
        for (int trial = 0; trial < 5; ++trial) {
            const MomentPair s = g.moments(3);
            const MomentPair t = g.moments(3);
            const double rho_s = 0.3 * kl_divergence(t, s);
            const KlRadiusResult r = min_radius_kl_detail(s, t, rho_s);

            // Dense grid over [0, gamma_max] then a local zoom.
            const double gmax = 4.0 * r.gamma + 1.0;
            const int n = 1000000;
            double best = -1e300;
            double best_g = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double gam = gmax * i / n;
                const double v = dual_value(s, t, rho_s, gam);
                if (v > best) {
                    best = v;
                    best_g = gam;
                }
            }
            double h = gmax / n;
            for (int zoom = 0; zoom < 30; ++zoom, h *= 0.5) {
                for (double cand : {best_g - h, best_g + h}) {
                    if (cand < 0) continue;
                    const double v = dual_value(s, t, rho_s, cand);
                    if (v > best) {
                        best = v;
                        best_g = cand;
                    }
                }
            }
            CHECK(std::abs(r.radius - best) <= 1e-4);
            CHECK(kl_divergence(r.witness, s) <= rho_s + 1e-6);
            CHECK(kl_divergence(r.witness, t) <= r.radius + 1e-6);
        }
    }
    SUBCASE("non-PD input") {
        MomentPair bad{Vector::Zero(2), Matrix::Zero(2, 2)};
        CHECK_THROWS_AS(min_radius_kl(bad, g.moments(2), 1.0), NumericError);
    }
}

TEST_CASE("KL minimum radius decreases in rho_s") {
    Gen g(6);
    const MomentPair s = g.moments(3);
    const MomentPair t = g.moments(3);
    const double d = kl_divergence(t, s);
    double prev = 1e300;
    for (double f : {0.01, 0.1, 0.3, 0.6, 0.9}) {
        const double r = min_radius_kl(s, t, f * d);
        CHECK(r <= prev + 1e-9);
        prev = r;
    }
}
