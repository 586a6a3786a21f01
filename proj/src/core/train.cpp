#include "train.hpp"

#include <numeric>

#include "error.hpp"
#include "loss.hpp"
#include "rng.hpp"

namespace timebridge {

double evaluate_loss(const ModelConfig& config, const ModelParams& params,
                     const std::vector<Sample>& samples, double alpha) {
    if (samples.empty()) throw config_error("evaluate_loss: empty sample set");
    double total = 0.0;
    for (const Sample& s : samples) {
        Tape tape;
        BoundParams bound = bind_params(tape, params);
        Var pred = model_forward(tape, s.input, config, bound);
        Var target = tape.constant(s.target);
        total += tape.value(hybrid_loss(tape, pred, target, alpha)).at(0);
    }
    return total / static_cast<double>(samples.size());
}

std::vector<Tensor> sample_gradients(const ModelConfig& config, const ModelParams& params,
                                     const Sample& sample, double alpha, double* loss_out) {
    Tape tape;
    BoundParams bound = bind_params(tape, params);
    Var pred = model_forward(tape, sample.input, config, bound);
    Var target = tape.constant(sample.target);
    Var loss = hybrid_loss(tape, pred, target, alpha);
    tape.backward(loss);
    if (loss_out) *loss_out = tape.value(loss).at(0);
    std::vector<Tensor> grads;
    grads.reserve(bound.nodes.size());
    for (Var node : bound.nodes) grads.push_back(tape.grad(node));
    return grads;
}

TrainResult train_model(const ModelConfig& config, ModelParams params,
                        const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                        const TrainConfig& tc) {
    config.validate();
    tc.validate();
    if (train_set.empty()) throw config_error("train_model: training set is empty");
    if (val_set.empty()) throw config_error("train_model: validation set is empty");

    TrainResult result;
    result.initial_train_loss = evaluate_loss(config, params, train_set, tc.alpha);
    result.best_val_loss = evaluate_loss(config, params, val_set, tc.alpha);
    result.best_params = params;
    result.best_epoch = 0;

    AdamState state = AdamState::init(params);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(tc.seed, 0x5F00 + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t batch_end =
                std::min(order.size(), pos + static_cast<std::size_t>(tc.batch_size));
            std::vector<Tensor> accum;
            double batch_loss = 0.0;
            for (std::size_t b = pos; b < batch_end; ++b) {
                double loss = 0.0;
                std::vector<Tensor> grads =
                    sample_gradients(config, params, train_set[order[b]], tc.alpha, &loss);
                batch_loss += loss;
                if (accum.empty()) {
                    accum = std::move(grads);
                } else {
                    for (std::size_t p = 0; p < accum.size(); ++p)
                        for (std::int64_t i = 0; i < accum[p].numel(); ++i)
                            accum[p].at(i) += grads[p].at(i);
                }
            }
            const double inv = 1.0 / static_cast<double>(batch_end - pos);
            for (auto& g : accum)
                for (std::int64_t i = 0; i < g.numel(); ++i) g.at(i) *= inv;
            adam_step(params, accum, state, tc);
            result.steps += 1;
            epoch_loss += batch_loss;
            pos = batch_end;
        }

        TrainLogEntry entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_loss / static_cast<double>(train_set.size());
        entry.val_loss = evaluate_loss(config, params, val_set, tc.alpha);
        result.log.push_back(entry);
        if (entry.val_loss < result.best_val_loss) {
            result.best_val_loss = entry.val_loss;
            result.best_params = params;
            result.best_epoch = epoch;
        }
    }
    result.final_params = std::move(params);
    return result;
}

}  // namespace timebridge
