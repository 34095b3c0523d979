#include "kge/train.hpp"

namespace kge {

void TrainConfig::validate() const {
    model.validate();
    if (lr <= 0.0) throw ConfigError("learning rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (label_smoothing < 0.0 || label_smoothing >= 0.5)
        throw ConfigError("label smoothing must be in [0, 0.5)");
    if (loss == LossKind::NegSampleBce && negatives < 1)
        throw ConfigError("negative sampling needs k >= 1");
    if (optimizer == OptimizerKind::Adam) {
        if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
            throw ConfigError("adam betas must be in (0, 1)");
        if (epsilon <= 0.0) throw ConfigError("adam epsilon must be > 0");
    }
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double bce_term(double logit, double label) {
    return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double bce_loss(std::span<const double> logits, std::span<const double> labels) {
    if (logits.size() != labels.size())
        throw ConfigError("logits and labels must have equal length");
    if (logits.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) acc += bce_term(logits[i], labels[i]);
    return acc / static_cast<double>(logits.size());
}

std::vector<Triple> negative_sample(const Triple& triple, std::uint32_t k,
                                    std::uint64_t entity_count, RngState& rng) {
    if (k < 1) throw ConfigError("negative sampling needs k >= 1");
    std::vector<Triple> out;
    out.reserve(k);
    for (std::uint32_t i = 0; i < k; ++i) {
        Triple c = triple;
        const bool corrupt_head = rng.coin();
        const std::uint64_t replacement = rng.uniform_index(entity_count);
        (corrupt_head ? c.head : c.tail) = replacement;
        out.push_back(c);
    }
    return out;
}

}  // namespace kge
