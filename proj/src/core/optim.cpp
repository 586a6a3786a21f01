#include "optim.hpp"

#include <cmath>

#include "error.hpp"

namespace timebridge {

void TrainConfig::validate() const {
    if (learning_rate <= 0) throw config_error("learning_rate must be > 0");
    if (alpha < 0 || alpha > 1) throw config_error("alpha must lie in [0, 1]");
    if (epochs < 1) throw config_error("epochs must be >= 1");
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1) {
        throw config_error("adam betas must lie in [0, 1)");
    }
    if (adam_eps <= 0) throw config_error("adam_eps must be > 0");
}

AdamState AdamState::init(const ModelParams& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params.params) {
        s.m.push_back(Tensor::zeros(p.value.shape()));
        s.v.push_back(Tensor::zeros(p.value.shape()));
    }
    return s;
}

void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& config) {
    if (grads.size() != params.size() || state.m.size() != params.size()) {
        throw dimension_error("adam_step: gradient/state count does not match parameter count");
    }
    state.step += 1;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& value = params.params[p].value;
        const Tensor& g = grads[p];
        if (!g.same_shape(value)) {
            throw dimension_error("adam_step: gradient shape mismatch for \"" +
                                  params.params[p].name + "\"");
        }
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::int64_t i = 0; i < value.numel(); ++i) {
            m.at(i) = b1 * m.at(i) + (1.0 - b1) * g.at(i);
            v.at(i) = b2 * v.at(i) + (1.0 - b2) * g.at(i) * g.at(i);
            const double m_hat = m.at(i) / bc1;
            const double v_hat = v.at(i) / bc2;
            value.at(i) -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
        }
    }
}

}  // namespace timebridge
