#include "drda/aggregation.hpp"

#include <cmath>
#include <limits>

namespace drda {

void ExpertFamily::validate() const {
    if (experts.empty()) throw ConfigError("expert family is empty");
    if (!labels.empty() && labels.size() != experts.size()) throw ConfigError("label count differs from expert count");
    const Eigen::Index d = features();
    for (const auto& e : experts) {
        if (e.beta.size() != d) throw ConfigError("experts have different lengths");
    }
}

BoaState boa_init(std::size_t family_size, const std::optional<Vector>& prior, double upsilon) {
    if (family_size < 1) throw ConfigError("family must contain at least one expert");
    if (!(upsilon > 0.0)) throw ConfigError("learning rate must be positive");
    BoaState s;
    s.upsilon = upsilon;
    if (prior) {
        if (static_cast<std::size_t>(prior->size()) != family_size) throw ConfigError("prior length mismatch");
        if ((prior->array() < -1e-9).any() || std::abs(prior->sum() - 1.0) > 1e-9 || !prior->allFinite()) {
            throw ConfigError("prior is not on the probability simplex");
        }
        s.weights = prior->cwiseMax(0.0);
        s.weights /= s.weights.sum();
    } else {
        s.weights = Vector::Constant(static_cast<Eigen::Index>(family_size), 1.0 / static_cast<double>(family_size));
    }
    return s;
}

namespace {

Vector expert_predictions(const ExpertFamily& family, const Vector& x, Eigen::Index expected) {
    if (static_cast<Eigen::Index>(family.size()) != expected) throw ConfigError("state and family sizes differ");
    Vector out(expected);
    for (Eigen::Index k = 0; k < expected; ++k) {
        const Expert& e = family.experts[static_cast<std::size_t>(k)];
        if (e.beta.size() != x.size()) throw DataError("feature dimension mismatch");
        out(k) = e.predict(x);
    }
    return out;
}

}  // namespace

double boa_predict(const BoaState& state, const ExpertFamily& family, const Vector& x) {
    return state.weights.dot(expert_predictions(family, x, state.weights.size()));
}

BoaState boa_update(const BoaState& state, const ExpertFamily& family, const Vector& x, double y) {
    const Vector pred = expert_predictions(family, x, state.weights.size());
    const Vector loss = (pred.array() - y).square();
    if (!std::isfinite(y) || !loss.allFinite()) throw DataError("non-finite observation");

    const double mean_loss = state.weights.dot(loss);
    const double u = state.upsilon;
    const Eigen::Index n = loss.size();
    Vector expo(n);
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double rel = loss(k) - mean_loss;
        expo(k) = state.weights(k) > 0.0 ? std::log(state.weights(k)) - u * (1.0 + u * rel) * rel
                                         : -std::numeric_limits<double>::infinity();
        top = std::max(top, expo(k));
    }
    BoaState next = state;
    // Eigen's vectorized exp clamps -inf to a tiny positive value.
    for (Eigen::Index k = 0; k < n; ++k) next.weights(k) = std::exp(expo(k) - top);
    next.weights /= next.weights.sum();
    ++next.step;
    return next;
}

CumulativeLoss cumulative_loss(const ExpertFamily& family, const std::vector<Sample>& stream, double upsilon,
                               const std::optional<Vector>& prior, PredictionConvention convention) {
    family.validate();
    BoaState state = boa_init(family.size(), prior, upsilon);
    CumulativeLoss out;
    out.per_step.reserve(stream.size());
    out.weight_history.reserve(stream.size());
    for (const auto& s : stream) {
        double yhat = 0.0;
        if (convention == PredictionConvention::PreUpdate) {
            yhat = boa_predict(state, family, s.x);
            state = boa_update(state, family, s.x, s.y);
        } else {
            state = boa_update(state, family, s.x, s.y);
            yhat = boa_predict(state, family, s.x);
        }
        out.total += (yhat - s.y) * (yhat - s.y);
        out.per_step.push_back(out.total);
        out.weight_history.push_back(state.weights);
    }
    return out;
}

}  // namespace drda
