#pragma once

#include "drda/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace drda {

struct BoaState {
    Vector weights;  // on the probability simplex
    double upsilon = 0.5;
    long step = 0;
};

struct ExpertFamily {
    std::string name;
    std::vector<Expert> experts;
    std::vector<std::string> labels;

    std::size_t size() const { return experts.size(); }
    Eigen::Index features() const { return experts.empty() ? 0 : experts.front().beta.size(); }

    /// Throws if empty, ragged, or labels and experts disagree in count.
    void validate() const;
};

/// Which weights produce the step-j prediction: those before observing y_j
/// (the online protocol, default) or those after.
enum class PredictionConvention { PreUpdate, PostUpdate };

BoaState boa_init(std::size_t family_size, const std::optional<Vector>& prior = std::nullopt,
                  double upsilon = 0.5);

double boa_predict(const BoaState& state, const ExpertFamily& family, const Vector& x);

/// One exponential-weights step with the second-order correction:
///   pi_k <- pi_k exp(-u (1 + u L_k) L_k) / Z,  L_k = l_k - sum_i pi_i l_i.
BoaState boa_update(const BoaState& state, const ExpertFamily& family, const Vector& x, double y);

struct CumulativeLoss {
    double total = 0.0;
    std::vector<double> per_step;       // running sums, one per stream element
    std::vector<Vector> weight_history; // weights after each update
};

CumulativeLoss cumulative_loss(const ExpertFamily& family, const std::vector<Sample>& stream, double upsilon = 0.5,
                               const std::optional<Vector>& prior = std::nullopt,
                               PredictionConvention convention = PredictionConvention::PreUpdate);

}  // namespace drda
