#pragma once

#include "drda/types.hpp"

#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace drda::barrier {

/// Affine symmetric matrix function A(x) = constant + sum_i x_i * terms_i,
/// constrained to be positive semidefinite.
struct MatrixInequality {
    Matrix constant;
    std::vector<std::pair<Eigen::Index, Matrix>> terms;

    void add(Eigen::Index var, Matrix coeff) { terms.emplace_back(var, std::move(coeff)); }
    Matrix evaluate(const Vector& x) const;
};

/// Smooth convex scalar constraint g(x) <= 0. `evaluate` returns false when x
/// is outside the domain of g; otherwise it fills value, gradient and Hessian.
struct ScalarInequality {
    std::function<bool(const Vector& x, double& value, Vector& grad, Matrix& hess)> evaluate;
};

/// minimize objectiveᵀx subject to the matrix and scalar inequalities.
struct Problem {
    Eigen::Index num_vars = 0;
    Vector objective;
    std::vector<MatrixInequality> matrix_constraints;
    std::vector<ScalarInequality> scalar_constraints;

    /// Barrier complexity: sum of block sizes plus the scalar count.
    double barrier_degree() const;

    /// x lies strictly inside every constraint.
    bool strictly_feasible(const Vector& x) const;
};

struct Options {
    double mu_start = 1.0;       // initial barrier weight (objective scaled by 1/mu)
    double mu_final = 1e-9;
    double mu_factor = 5.0;
    int max_newton_steps = 200;  // per barrier stage
    double decrement_tol = 1e-10;
    double opt_tol = 1e-6;       // required bound on degree * mu at exit
};

struct Result {
    Vector x;
    bool converged = false;
    double gap_bound = 0.0;  // barrier_degree * mu of the last completed stage
    int newton_steps = 0;
};

/// Interface between problem assembly and a numerical solver.
class SolverBackend {
public:
    virtual ~SolverBackend() = default;
    virtual Result solve(const Problem& problem, const Vector& strictly_feasible_start, const Options& opts) const = 0;
};

/// Path-following log-barrier method with damped Newton steps.
class LogBarrierSolver final : public SolverBackend {
public:
    Result solve(const Problem& problem, const Vector& strictly_feasible_start, const Options& opts) const override;
};

std::unique_ptr<SolverBackend> default_backend();

}  // namespace drda::barrier
