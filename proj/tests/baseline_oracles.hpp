#pragma once

// Independent references for the regression baselines.

#include "drda/baselines.hpp"

#include <Eigen/LU>

#include <utility>
#include <vector>

namespace baseline_oracles {

using drda::Dataset;
using drda::Matrix;
using drda::Sample;
using drda::Vector;

// Normal equations assembled entry by entry and solved by full-pivot LU.
inline Vector normal_equations(const std::vector<std::pair<Sample, double>>& rows, double eta, double scale) {
    const Eigen::Index d = rows.front().first.x.size();
    Matrix a = Matrix::Zero(d, d);
    Vector b = Vector::Zero(d);
    for (const auto& [s, w] : rows) {
        for (Eigen::Index i = 0; i < d; ++i) {
            b(i) += scale * w * s.x(i) * s.y;
            for (Eigen::Index j = 0; j < d; ++j) a(i, j) += scale * w * s.x(i) * s.x(j);
        }
    }
    for (Eigen::Index i = 0; i < d; ++i) a(i, i) += eta;
    return a.fullPivLu().solve(b);
}

// Four source rows: grid over the direction simplex, with the scale fixed by
// the normalization, then a pairwise-exchange refinement.
inline double simplex_grid_best(const Dataset& s, const Dataset& t, double h, int steps) {
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    Vector k = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index l = 0; l < n; ++l) k(l) += drda::gaussian_kernel(s.rows[i], s.rows[l], h);
    }
    double best = -1e300;
    Vector arg = Vector::Zero(n);
    auto eval = [&](const Vector& dir) {
        const double scale = static_cast<double>(n) / dir.dot(k);
        return drda::rws_objective(s, t, h, scale * dir);
    };
    for (int a = 0; a <= steps; ++a) {
        for (int b = 0; a + b <= steps; ++b) {
            for (int c = 0; a + b + c <= steps; ++c) {
                Vector dir(4);
                dir << a, b, c, steps - a - b - c;
                dir /= steps;
                const double v = eval(dir);
                if (v > best) {
                    best = v;
                    arg = dir;
                }
            }
        }
    }
    // Local refinement on the simplex by coordinate-pair exchanges.
    for (double step = 0.5 / steps; step > 1e-9; step *= 0.5) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (i == j || arg(j) < step) continue;
                    Vector cand = arg;
                    cand(i) += step;
                    cand(j) -= step;
                    const double v = eval(cand);
                    if (v > best + 1e-15) {
                        best = v;
                        arg = cand;
                        improved = true;
                    }
                }
            }
        }
    }
    return best;
}

}  // namespace baseline_oracles
