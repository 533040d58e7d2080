#pragma once

#include "drda/types.hpp"

#include <cmath>
#include <random>

namespace testing_support {

using drda::Matrix;
using drda::MomentPair;
using drda::Vector;

struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

    Vector vec(Eigen::Index n, double scale = 1.0) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * normal();
        return v;
    }

    Matrix mat(Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal();
        }
        return m;
    }

    // A Aᵀ / n + floor I: well-conditioned SPD.
    Matrix spd(Eigen::Index n, double floor = 0.2) {
        const Matrix a = mat(n, n);
        Matrix s = a * a.transpose() / static_cast<double>(n);
        s.diagonal().array() += floor;
        return 0.5 * (s + s.transpose());
    }

    MomentPair moments(Eigen::Index p, double mean_scale = 1.0, double floor = 0.2) {
        return {vec(p, mean_scale), spd(p, floor)};
    }

    drda::Dataset dataset(std::size_t n, Eigen::Index d) {
        drda::Dataset data;
        for (std::size_t i = 0; i < n; ++i) data.rows.push_back({vec(d), normal()});
        return data;
    }
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testing_support
