#include "drda/ir_experts.hpp"
#include "drda/moments.hpp"
#include "support.hpp"

#include <doctest.h>

#include <functional>

using namespace drda;
using testing_support::Gen;
using testing_support::rel_err;

namespace {

MomentPair standard2() { return {Vector::Zero(2), Matrix::Identity(2, 2)}; }

// Plain bisection on the kappa root equation in its original variable.
long double kappa_by_bisection(long double w1, long double w2, long double rho) {
    auto r = [&](long double k) {
        const long double g = k - w1;
        return w2 * w1 / (g * g) + w1 / g + std::log(1.0L - w1 / k) - rho;
    };
    long double lo = w1 * (1.0L + 1e-15L);
    long double hi = 2.0L * w1;
    while (r(hi) > 0) hi *= 2.0L;
    for (int i = 0; i < 400; ++i) {
        const long double mid = 0.5L * (lo + hi);
        (r(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5L * (lo + hi);
}

double quad_form(const Vector& beta, const MomentPair& c) {
    const Vector w = augment(beta);
    return w.dot(c.second_moment() * w);
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& b, double h) {
    Vector g(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        Vector up = b;
        Vector dn = b;
        up(i) += h;
        dn(i) -= h;
        g(i) = (f(up) - f(dn)) / (2 * h);
    }
    return g;
}

}  // namespace

TEST_CASE("KL worst case: unit example") {
    const KlWorstCase wc = kl_worst_case(Vector::Zero(1), standard2(), 1.0);
    CHECK(wc.omega1 == doctest::Approx(1.0));
    CHECK(wc.omega2 == doctest::Approx(0.0));
    // Frozen from a 50-digit evaluation of the root equation.
    CHECK(wc.kappa_star == doctest::Approx(1.46594127238499289).epsilon(1e-12));
    CHECK(wc.value == doctest::Approx(3.14619322062058259).epsilon(1e-12));
    CHECK(wc.value == doctest::Approx(wc.kappa_star / (wc.kappa_star - 1.0)).epsilon(1e-12));

    const MomentPair m = kl_worst_case_moments(Vector::Zero(1), standard2(), 1.0);
    CHECK(m.mean.norm() < 1e-15);
    CHECK(m.cov(0, 0) == doctest::Approx(1.0));
    CHECK(m.cov(1, 1) == doctest::Approx(3.14619322062058259).epsilon(1e-12));
    CHECK(std::abs(m.cov(0, 1)) < 1e-15);
}

TEST_CASE("KL worst case: root agrees with independent bisection") {
    Gen g(21);
    for (int trial = 0; trial < 200; ++trial) {
        const double w1 = std::exp(g.uniform(-4, 4));
        const double w2 = trial % 5 == 0 ? 0.0 : std::exp(g.uniform(-6, 6));
        const double rho = std::exp(g.uniform(-6, 3));
        const KlWorstCase wc = kl_worst_case_reduced(w1, w2, rho);
        const double oracle = static_cast<double>(kappa_by_bisection(w1, w2, rho));
        CHECK(rel_err(wc.kappa_star, oracle) <= 1e-9);
        CHECK(wc.kappa_star > w1);
        CHECK(wc.kappa_star <= kl_kappa_upper_bound(w1, w2, rho) * (1 + 1e-12));
        CHECK(wc.value >= w1 + w2 - 1e-9);
    }
}

TEST_CASE("KL worst case: bound without the omega ratio fails on a skewed instance") {
    // omega1 = 0.01, omega2 = 100, rho = 1: the root exceeds
    // omega1 (1 + 2 rho + sqrt(1 + 4 rho omega2)) / (2 rho), but not the scaled bound.
    const KlWorstCase wc = kl_worst_case_reduced(0.01, 100.0, 1.0);
    const double naive = 0.01 * (1 + 2 + std::sqrt(1 + 4 * 100.0)) / 2.0;
    CHECK(wc.kappa_star > naive);
    CHECK(wc.kappa_star <= kl_kappa_upper_bound(0.01, 100.0, 1.0));
}

TEST_CASE("KL worst case: limits, scaling, errors") {
    Gen g(22);
    for (int trial = 0; trial < 20; ++trial) {
        const double w1 = std::exp(g.uniform(-2, 2));
        const double w2 = std::exp(g.uniform(-2, 2));
        CHECK(rel_err(kl_worst_case_reduced(w1, w2, 1e-8).value, w1 + w2) <= 1e-3);
        const double rho = std::exp(g.uniform(-3, 2));
        const double s = std::exp(g.uniform(-3, 3));
        const double base = kl_worst_case_reduced(w1, w2, rho).value;
        CHECK(std::abs(kl_worst_case_reduced(s * w1, s * w2, rho).value - s * base) <= 1e-9 * s * base);
    }
    CHECK_THROWS_AS(kl_worst_case(Vector::Zero(1), standard2(), 0.0), NumericError);
    CHECK_THROWS_AS(kl_worst_case(Vector::Zero(1), standard2(), -1.0), NumericError);
    MomentPair bad{Vector::Zero(2), Matrix::Zero(2, 2)};
    CHECK_THROWS_AS(kl_worst_case(Vector::Zero(1), bad, 1.0), NumericError);
}

TEST_CASE("KL gradient matches finite differences") {
    Gen g(23);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index d = g.integer(1, 6);
        const MomentPair c = g.moments(d + 1);
        const double rho = std::exp(g.uniform(-3, 1));
        const Vector beta = g.vec(d);
        const Vector grad = kl_worst_case_gradient(beta, c, rho);
        const Vector fd = fd_gradient([&](const Vector& b) { return kl_worst_case(b, c, rho).value; }, beta, 1e-5);
        CHECK((grad - fd).norm() <= 1e-4 * std::max(1.0, fd.norm()));
    }
    // Diagonal covariance, zero mean, beta = 0: no cross term, zero gradient.
    MomentPair diag{Vector::Zero(3), Matrix(Eigen::Vector3d(1, 2, 3).asDiagonal())};
    CHECK(kl_worst_case_gradient(Vector::Zero(2), diag, 0.5).norm() < 1e-14);
}

TEST_CASE("KL worst-case moments: feasibility and zero gap") {
    Gen g(24);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index d = g.integer(1, 5);
        const MomentPair c = g.moments(d + 1);
        const double rho = std::exp(g.uniform(-4, 1));
        const Vector beta = g.vec(d);
        const MomentPair m = kl_worst_case_moments(beta, c, rho);
        CHECK(std::abs(kl_divergence(m, c) - rho) <= 1e-7 * std::max(1.0, rho));
        CHECK(rel_err(quad_form(beta, m), kl_worst_case(beta, c, rho).value) <= 1e-7);
    }
}

TEST_CASE("worst-case values: monotone, dominant, convex") {
    Gen g(25);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index d = g.integer(1, 4);
        const MomentPair c = g.moments(d + 1);
        const Vector b1 = g.vec(d);
        const Vector b2 = g.vec(d);
        const double r1 = std::exp(g.uniform(-3, 1));
        const double r2 = r1 * (1 + g.uniform(0.01, 2));
        CHECK(kl_worst_case(b1, c, r1).value <= kl_worst_case(b1, c, r2).value + 1e-12);
        CHECK(wasserstein_worst_case(b1, c, r1) <= wasserstein_worst_case(b1, c, r2) + 1e-12);
        CHECK(kl_worst_case(b1, c, r1).value >= quad_form(b1, c) - 1e-9);
        CHECK(wasserstein_worst_case(b1, c, r1) >= quad_form(b1, c) - 1e-9);
        const double t = g.uniform(0.05, 0.95);
        const Vector bt = t * b1 + (1 - t) * b2;
        CHECK(kl_worst_case(bt, c, r1).value <=
              t * kl_worst_case(b1, c, r1).value + (1 - t) * kl_worst_case(b2, c, r1).value + 1e-9);
        CHECK(wasserstein_worst_case(bt, c, r1) <=
              t * wasserstein_worst_case(b1, c, r1) + (1 - t) * wasserstein_worst_case(b2, c, r1) + 1e-9);
    }
}

TEST_CASE("solve_ir_kl") {
    Gen g(26);
    SUBCASE("vanishing radius gives least squares") {
        const MomentPair c = g.moments(3);
        const IrSolution sol = solve_ir_kl(c, 1e-10);
        CHECK(sol.converged);
        CHECK((sol.expert.beta - least_squares_on_moments(c)).norm() <= 1e-4);
    }
    SUBCASE("even objective gives zero") {
        MomentPair c{Vector::Zero(3), Matrix(Eigen::Vector3d(1, 2, 0.5).asDiagonal())};
        const IrSolution sol = solve_ir_kl(c, 0.7);
        CHECK(sol.expert.beta.norm() <= 1e-6);
    }
    SUBCASE("random probes never beat the solution") {
        for (int trial = 0; trial < 3; ++trial) {
            const MomentPair c = g.moments(3);
            const double rho = std::exp(g.uniform(-2, 1));
            const IrSolution sol = solve_ir_kl(c, rho);
            CHECK(sol.converged);
            CHECK(kl_worst_case_gradient(sol.expert.beta, c, rho).norm() <= 1e-5);
            for (int probe = 0; probe < 10000; ++probe) {
                const Vector b = sol.expert.beta + g.vec(2, std::exp(g.uniform(-6, 1)));
                CHECK_FALSE(kl_worst_case(b, c, rho).value < sol.objective - 1e-6);
            }
        }
    }
    SUBCASE("ill-conditioned center still converges") {
        MomentPair c = g.moments(5);
        c.cov += 1e4 * c.mean * c.mean.transpose();
        const IrSolution sol = solve_ir_kl(c, 0.05);
        CHECK(sol.converged);
        CHECK(sol.residual <= 1e-6);
    }
}

TEST_CASE("Wasserstein worst case: closed form and dual") {
    CHECK(wasserstein_worst_case(Vector::Zero(1), standard2(), 1.0) == doctest::Approx(4.0));
    Gen g(27);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index d = g.integer(1, 5);
        const MomentPair c = g.moments(d + 1);
        const Vector beta = g.vec(d);
        const Vector w = augment(beta);
        const double q = quad_form(beta, c);
        CHECK(wasserstein_worst_case(beta, c, 0.0) == doctest::Approx(q).epsilon(1e-12));
        const double rho = std::exp(g.uniform(-4, 2));
        const double n2 = w.squaredNorm();
        const double kappa = std::sqrt(n2) * (std::sqrt(n2) + std::sqrt(q / rho));
        const double dual = kappa * rho + kappa * q / (kappa - n2);
        CHECK(std::abs(wasserstein_worst_case(beta, c, rho) - dual) <= 1e-10 * std::max(1.0, dual));
    }
}

TEST_CASE("solve_ir_wasserstein") {
    MomentPair c{Vector::Zero(2), (Matrix(2, 2) << 1, 0.5, 0.5, 1).finished()};
    const IrSolution ls = solve_ir_wasserstein(c, 0.0);
    CHECK(ls.expert.beta(0) == doctest::Approx(0.5).epsilon(1e-10));

    MomentPair id{Vector::Zero(4), Matrix::Identity(4, 4)};
    for (double rho : {0.0, 0.1, 2.0}) CHECK(solve_ir_wasserstein(id, rho).expert.beta.norm() <= 1e-10);

    Gen g(28);
    for (int trial = 0; trial < 3; ++trial) {
        const MomentPair r = g.moments(2);
        const IrSolution sol = solve_ir_wasserstein(r, 0.3);
        CHECK(sol.converged);
        CHECK(sol.residual <= 1e-8);
        double best = 1e300;
        double arg = 0.0;
        for (int i = 0; i <= 1000000; ++i) {
            const double b = -10.0 + 20.0 * i / 1000000.0;
            const double v = wasserstein_worst_case(Vector::Constant(1, b), r, 0.3);
            if (v < best) {
                best = v;
                arg = b;
            }
        }
        CHECK(std::abs(sol.expert.beta(0) - arg) <= 1e-4);
        CHECK(sol.objective <= best + 1e-10);
    }
}
