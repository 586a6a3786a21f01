#pragma once

#include "dataset.hpp"
#include "optim.hpp"

namespace timebridge {

struct TrainLogEntry {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::vector<TrainLogEntry> log;  // one entry per epoch
    ModelParams best_params;         // lowest validation loss
    ModelParams final_params;        // after the last step
    double best_val_loss = 0.0;
    int best_epoch = 0;
    double initial_train_loss = 0.0;  // before the first update
    long steps = 0;                   // optimizer steps taken
};

// Mean hybrid loss of the model over a sample set (no updates).
double evaluate_loss(const ModelConfig& config, const ModelParams& params,
                     const std::vector<Sample>& samples, double alpha);

// Mini-batch Adam on the hybrid loss. Per-sample gradients are averaged over
// each batch in fixed sample order; shuffling is seeded per epoch, so the
// whole run is reproducible from TrainConfig::seed.
TrainResult train_model(const ModelConfig& config, ModelParams init_params,
                        const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                        const TrainConfig& tc);

// Gradient of the hybrid loss for one sample; used by the trainer and the
// gradient checker.
std::vector<Tensor> sample_gradients(const ModelConfig& config, const ModelParams& params,
                                     const Sample& sample, double alpha, double* loss_out);

}  // namespace timebridge
