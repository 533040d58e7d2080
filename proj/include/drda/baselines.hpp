#pragma once

#include "drda/types.hpp"

#include <vector>

namespace drda {

/// ((1/N) sum x xᵀ + eta I)⁻¹ (1/N) sum x y.
Expert ridge(const Dataset& data, double eta = 1e-6);

/// lambda * beta_s + (1 - lambda) * beta_t.
Expert convex_combination(const Expert& beta_s, const Expert& beta_t, double lambda);

enum class ScheduleKind { Linear, ExponentialIncreasing };

struct Schedule {
    std::vector<double> values;
    ScheduleKind kind = ScheduleKind::Linear;
};

/// K values from a to b. The exponential kind follows
///   v_1 = a,  v_{k+1} = v_k - (a - b) e^k / sum_{i=1}^{K-1} e^i,  k = 1..K-1,
/// so consecutive steps grow by a factor e.
Schedule schedule(double a, double b, int k, ScheduleKind kind);

struct RwsOptions {
    int max_iters = 20000;
    double tol = 1e-6;  // on the projected-gradient mapping
};

struct KernelWeights {
    Vector alpha;    // kernel mixture coefficients, >= 0
    Vector weights;  // w_i = sum_l alpha_l K_h(s_i, s_l); sums to N_S
    double bandwidth = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// exp(-(||x_u - x_v||² + (y_u - y_v)²) / h²).
double gaussian_kernel(const Sample& u, const Sample& v, double h);

/// sum_j log(sum_l alpha_l K_h(t_j, s_l)); -inf if any inner sum is zero.
double rws_objective(const Dataset& source, const Dataset& target, double h, const Vector& alpha);

/// Maximizes rws_objective subject to sum_i w_i = N_S and alpha >= 0.
KernelWeights rws_weights(const Dataset& source, const Dataset& target, double h, const RwsOptions& opts = {});

/// (sum_j x_j x_jᵀ + sum_i w_i x_i x_iᵀ + eta I)⁻¹ (sum_j x_j y_j + sum_i w_i x_i y_i),
/// with j over target rows and i over source rows. Sums are not normalized.
Expert weighted_ridge(const Dataset& source, const Dataset& target, const Vector& weights, double eta = 1e-6);

/// ridge on train plus the given stream prefix.
Expert sequential_ridge(const Dataset& train, const std::vector<Sample>& prefix, double eta = 1e-6);

}  // namespace drda
