#pragma once

#include <cstdint>
#include <vector>

#include "model.hpp"

namespace timebridge {

struct TrainConfig {
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int epochs = 10;
    int batch_size = 32;
    double alpha = 0.35;  // hybrid loss mix
    std::uint64_t seed = 42;

    void validate() const;
};

struct AdamState {
    std::vector<Tensor> m;  // first moments, aligned with ModelParams order
    std::vector<Tensor> v;  // second moments
    long step = 0;

    static AdamState init(const ModelParams& params);
};

// Bias-corrected update in place. grads must align with params.
void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& config);

}  // namespace timebridge
