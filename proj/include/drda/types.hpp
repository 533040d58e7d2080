#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace drda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Errors are grouped by what the CLI maps them to (exit codes 1, 2, 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// Mean and covariance of the joint vector (x, y); the response is the last
/// coordinate, so p = d + 1.
struct MomentPair {
    Vector mean;
    Matrix cov;

    Eigen::Index dim() const { return mean.size(); }

    /// Second-moment matrix cov + mean meanᵀ.
    Matrix second_moment() const;
};

enum class DomainTag { Source, Target };

struct Sample {
    Vector x;
    double y = 0.0;
};

struct Dataset {
    std::vector<Sample> rows;
    DomainTag domain = DomainTag::Source;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    Eigen::Index features() const { return rows.empty() ? 0 : rows.front().x.size(); }
};

enum class DivergenceKind { KlType, WassersteinType };

std::string to_string(DivergenceKind kind);

/// A linear predictor y ≈ betaᵀx together with a label saying how it was built.
struct Expert {
    Vector beta;
    std::string provenance;

    double predict(const Vector& x) const { return beta.dot(x); }
};

/// w = (beta, -1), the augmented coefficient vector acting on (x, y).
Vector augment(const Vector& beta);

}  // namespace drda
