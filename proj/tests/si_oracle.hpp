#pragma once

// Oracle for the two-dimensional (d = 1) SI programs.
//
// Coordinates are z = (mu_1, mu_2, M_11, M_12, M_22). The program is convex in z
// (concave objective, convex divergence balls and floor), so a cutting-plane
// search converges to its optimum. All divergences use closed-form 2 x 2
// algebra written independently of the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace si_oracle {

using Z = std::array<double, 5>;

struct Moments2 {
    double m1, m2;
    double s11, s12, s22;
};

inline double det2(double a, double b, double c) { return a * c - b * b; }

// D(a || b).
inline double kl2(const Moments2& a, const Moments2& b) {
    const double db = det2(b.s11, b.s12, b.s22);
    const double da = det2(a.s11, a.s12, a.s22);
    if (!(db > 0) || !(da > 0) || !(a.s11 > 0) || !(b.s11 > 0)) return std::numeric_limits<double>::infinity();
    const double i11 = b.s22 / db, i12 = -b.s12 / db, i22 = b.s11 / db;
    const double e1 = b.m1 - a.m1, e2 = b.m2 - a.m2;
    const double quad = i11 * e1 * e1 + 2 * i12 * e1 * e2 + i22 * e2 * e2;
    const double tr = i11 * a.s11 + 2 * i12 * a.s12 + i22 * a.s22;
    return quad + tr - std::log(da / db) - 2.0;
}

// tr of the principal root of a 2 x 2 PSD matrix: sqrt(tr + 2 sqrt(det)).
inline double trace_sqrt2(double a, double b, double c) {
    const double d = std::max(0.0, det2(a, b, c));
    return std::sqrt(std::max(0.0, a + c + 2 * std::sqrt(d)));
}

inline double w2(const Moments2& a, const Moments2& b) {
    if (a.s11 < 0 || a.s22 < 0 || det2(a.s11, a.s12, a.s22) < -1e-14) return std::numeric_limits<double>::infinity();
    // sqrt(B) via the 2 x 2 formula, then tr sqrt(sqrt(B) A sqrt(B)).
    const double sd = std::sqrt(std::max(0.0, det2(b.s11, b.s12, b.s22)));
    const double norm = std::sqrt(std::max(1e-300, b.s11 + b.s22 + 2 * sd));
    const double r11 = (b.s11 + sd) / norm, r12 = b.s12 / norm, r22 = (b.s22 + sd) / norm;
    // C = R A R
    const double ra11 = r11 * a.s11 + r12 * a.s12, ra12 = r11 * a.s12 + r12 * a.s22;
    const double ra21 = r12 * a.s11 + r22 * a.s12, ra22 = r12 * a.s12 + r22 * a.s22;
    const double c11 = ra11 * r11 + ra12 * r12;
    const double c12 = ra11 * r12 + ra12 * r22;
    const double c22 = ra21 * r12 + ra22 * r22;
    const double e1 = a.m1 - b.m1, e2 = a.m2 - b.m2;
    return e1 * e1 + e2 * e2 + a.s11 + a.s22 + b.s11 + b.s22 - 2 * trace_sqrt2(c11, c12, c22);
}

inline Moments2 from_z(const Z& z) {
    return {z[0], z[1], z[2] - z[0] * z[0], z[3] - z[0] * z[1], z[4] - z[1] * z[1]};
}

inline Z to_z(const Moments2& m) {
    return {m.m1, m.m2, m.s11 + m.m1 * m.m1, m.s12 + m.m1 * m.m2, m.s22 + m.m2 * m.m2};
}

inline double tau(const Z& z) {
    if (!(z[2] > 0)) return -std::numeric_limits<double>::infinity();
    return z[4] - z[3] * z[3] / z[2];
}

struct Problem {
    bool kl = true;
    Moments2 source, target;
    double rho_s = 0, rho_t = 0, eps = 0;

    double slack(const Z& z) const {
        const Moments2 m = from_z(z);
        // Floor: M - eps I >= 0.
        const double a = z[2] - eps, c = z[4] - eps;
        if (a < 0 || c < 0 || a * c - z[3] * z[3] < 0) return -1;
        const double ds = kl ? kl2(m, source) : w2(m, source);
        const double dt = kl ? kl2(m, target) : w2(m, target);
        return std::min(rho_s - ds, rho_t - dt);
    }
    bool feasible(const Z& z) const { return slack(z) >= 0; }
};

struct Result {
    double tau = -std::numeric_limits<double>::infinity();
    Z z{};
};

// Smallest eigenpair of [[a, b], [b, c]].
inline double min_eig2(double a, double b, double c, double& v1, double& v2) {
    const double mid = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    const double lam = mid - rad;
    // (b, lam - a) and (lam - c, b) both span the eigenspace; take the longer.
    double x = b, y = lam - a;
    if (std::hypot(lam - c, b) > std::hypot(x, y)) {
        x = lam - c;
        y = b;
    }
    const double n = std::hypot(x, y);
    if (n == 0) {
        v1 = a <= c ? 1 : 0;
        v2 = a <= c ? 0 : 1;
    } else {
        v1 = x / n;
        v2 = y / n;
    }
    return lam;
}

// Central-difference gradient of a divergence to one centre.
inline Z divergence_gradient(const Problem& pb, const Moments2& centre, const Z& z) {
    auto f = [&](const Z& x) { return pb.kl ? kl2(from_z(x), centre) : w2(from_z(x), centre); };
    Z g{};
    for (int k = 0; k < 5; ++k) {
        double h = 1e-7 * std::max(1.0, std::abs(z[k]));
        for (int tries = 0; tries < 40; ++tries, h *= 0.5) {
            Z up = z, dn = z;
            up[k] += h;
            dn[k] -= h;
            const double fu = f(up), fd = f(dn);
            if (std::isfinite(fu) && std::isfinite(fd)) {
                g[k] = (fu - fd) / (2 * h);
                break;
            }
        }
    }
    return g;
}

// Ellipsoid method on the convex program max tau(z) over the feasible set,
// started from the ball of the given radius around `centre`. Every cut is a
// (deep) subgradient cut: the floor and covariance cone use the minimum
// eigenvector, the divergences use finite differences of the closed forms.
inline Result maximize(const Problem& pb, const Z& centre, double radius, int max_iters = 40000) {
    constexpr int n = 5;
    Result best;
    Z c = centre;
    double p[n][n] = {};
    for (int i = 0; i < n; ++i) p[i][i] = radius * radius;

    for (int it = 0; it < max_iters; ++it) {
        Z g{};
        double violation = 0;
        double v1 = 0, v2 = 0;
        const double floor_eig = min_eig2(c[2], c[3], c[4], v1, v2);
        const Moments2 m = from_z(c);
        double w1 = 0, w2v = 0;
        const double cov_eig = min_eig2(m.s11, m.s12, m.s22, w1, w2v);
        if (floor_eig < pb.eps) {
            g = {0, 0, -v1 * v1, -2 * v1 * v2, -v2 * v2};
            violation = pb.eps - floor_eig;
        } else if (!(cov_eig > 0)) {
            const double vm = w1 * c[0] + w2v * c[1];
            g = {2 * vm * w1, 2 * vm * w2v, -w1 * w1, -2 * w1 * w2v, -w2v * w2v};
            violation = -cov_eig;
        } else {
            const double ds = (pb.kl ? kl2(m, pb.source) : w2(m, pb.source)) - pb.rho_s;
            const double dt = (pb.kl ? kl2(m, pb.target) : w2(m, pb.target)) - pb.rho_t;
            if (ds > 0 || dt > 0) {
                const bool src = ds >= dt;
                g = divergence_gradient(pb, src ? pb.source : pb.target, c);
                violation = src ? ds : dt;
            } else {
                const double v = tau(c);
                if (v > best.tau) {
                    best.tau = v;
                    best.z = c;
                }
                // Keep {tau >= best}: a cut along -grad tau, deep when tau(c) < best.
                const double r = c[3] / c[2];
                g = {0, 0, -r * r, 2 * r, -1};
                violation = best.tau - v;
            }
        }

        double pg[n];
        double gpg = 0;
        for (int i = 0; i < n; ++i) {
            pg[i] = 0;
            for (int j = 0; j < n; ++j) pg[i] += p[i][j] * g[j];
            gpg += g[i] * pg[i];
        }
        if (!(gpg > 0)) break;
        const double s = std::sqrt(gpg);
        const double alpha = std::min(violation / s, 0.99);
        const double step = (1 + n * alpha) / (n + 1);
        const double shrink = n * n * (1 - alpha * alpha) / (n * n - 1.0);
        const double rank = 2 * (1 + n * alpha) / ((n + 1) * (1 + alpha));
        for (int i = 0; i < n; ++i) c[i] -= step * pg[i] / s;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) p[i][j] = shrink * (p[i][j] - rank * pg[i] * pg[j] / gpg);
        }
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < i; ++j) p[i][j] = p[j][i] = 0.5 * (p[i][j] + p[j][i]);
        }
        double tr = 0;
        for (int i = 0; i < n; ++i) tr += p[i][i];
        if (tr < 1e-24 * radius * radius) break;
    }
    return best;
}

}  // namespace si_oracle
