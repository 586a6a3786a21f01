#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/loss.hpp"
#include "core/rng.hpp"
#include "core/synthetic.hpp"
#include "core/train.hpp"

using namespace timebridge;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) t.at(i) = scale * rng.normal();
    return t;
}

double eval_loss(const Tensor& pred, const Tensor& target, double alpha) {
    Tape t;
    return t.value(hybrid_loss(t, t.leaf(pred), t.constant(target), alpha)).at(0);
}

ModelConfig tiny_config() {
    ModelConfig c;
    c.channels = 2;
    c.input_len = 12;
    c.output_len = 4;
    c.patch_len = 3;
    c.downsampled_patches = 2;
    c.hidden_dim = 4;
    c.ff_dim = 8;
    c.n_integrated_layers = 1;
    c.n_cointegrated_layers = 1;
    c.n_heads = 2;
    return c;
}

std::vector<Sample> sinusoid_samples(const ModelConfig& c, std::int64_t count,
                                     std::uint64_t seed) {
    TimeSeriesFrame frame =
        gen_trend_sinusoid(c.input_len + c.output_len + count - 1, c.channels, seed, 0.0);
    return windows(frame, c.input_len, c.output_len, 1);
}

}  // namespace

TEST_CASE("mae_time basics and gradient") {
    Tape t;
    Rng rng(1);
    Tensor x = random_tensor({2, 4}, rng);
    CHECK(t.value(mae_time(t, t.leaf(x), t.constant(x))).at(0) == 0.0);

    Tensor target({1, 4}, {0, 0, 0, 0});
    Tensor pred({1, 4}, {1, -1, 1, -1});
    CHECK(t.value(mae_time(t, t.leaf(pred), t.constant(target))).at(0) == 1.0);

    CHECK_THROWS_AS(mae_time(t, t.leaf(Tensor({2, 3})), t.leaf(Tensor({3, 2}))), dimension_error);

    // FD away from ties: gradient is sign/(C*O)
    Tensor p = random_tensor({2, 4}, rng);
    Tensor q({2, 4});
    for (std::int64_t i = 0; i < 8; ++i) q.at(i) = p.at(i) + (i % 2 ? 0.7 : -0.7);
    auto objective = [&]() {
        Tape tt;
        return tt.value(mae_time(tt, tt.leaf(p), tt.constant(q))).at(0);
    };
    Tape tg;
    Var vp = tg.leaf(p);
    Var loss = mae_time(tg, vp, tg.constant(q));
    tg.backward(loss);
    Tensor g = tg.grad(vp);
    for (std::int64_t i = 0; i < 8; ++i)
        CHECK(g.at(i) == doctest::Approx((p.at(i) > q.at(i) ? 1.0 : -1.0) / 8.0));
    std::vector<std::pair<std::string, Tensor*>> refs{{"pred", &p}};
    CHECK(finite_diff_check(objective, refs, {g}, 1e-5).max_rel_err < 1e-6);
}

TEST_CASE("mae_freq: zero at equality, constant error hits only the DC bin") {
    Tape t;
    Rng rng(2);
    Tensor x = random_tensor({2, 8}, rng);
    CHECK(t.value(mae_freq(t, t.leaf(x), t.constant(x))).at(0) <= 1e-11);

    // single channel, constant offset c: |DFT| differs only at DC where it is
    // O*|c|; the mean over O bins is |c|
    const double c = 0.37;
    const std::int64_t O = 8;
    Tensor base = random_tensor({1, O}, rng);
    Tensor shifted({1, O});
    for (std::int64_t i = 0; i < O; ++i) shifted.at(i) = base.at(i) + c;
    const double loss = t.value(mae_freq(t, t.leaf(shifted), t.constant(base))).at(0);
    CHECK(loss == doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("mae_freq gradient matches finite differences on a random 2x8 pair") {
    Rng rng(3);
    Tensor p = random_tensor({2, 8}, rng);
    Tensor q = random_tensor({2, 8}, rng);
    auto objective = [&]() {
        Tape t;
        return t.value(mae_freq(t, t.leaf(p), t.constant(q))).at(0);
    };
    Tape t;
    Var vp = t.leaf(p);
    t.backward(mae_freq(t, vp, t.constant(q)));
    std::vector<std::pair<std::string, Tensor*>> refs{{"pred", &p}};
    CHECK(finite_diff_check(objective, refs, {t.grad(vp)}, 1e-5).max_rel_err < 1e-5);
}

TEST_CASE("hybrid loss boundaries are exact and the mix is arithmetic") {
    Rng rng(4);
    Tensor p = random_tensor({2, 8}, rng);
    Tensor q = random_tensor({2, 8}, rng);
    Tape t;
    const double lt = t.value(mae_time(t, t.leaf(p), t.constant(q))).at(0);
    const double lf = t.value(mae_freq(t, t.leaf(p), t.constant(q))).at(0);
    CHECK(eval_loss(p, q, 0.0) == lt);
    CHECK(eval_loss(p, q, 1.0) == lf);
    CHECK(eval_loss(p, q, 0.35) == doctest::Approx(0.65 * lt + 0.35 * lf).epsilon(1e-12));
    CHECK_THROWS_AS(eval_loss(p, q, -0.1), config_error);
    CHECK_THROWS_AS(eval_loss(p, q, 1.1), config_error);
}

TEST_CASE("hybrid loss is nonnegative and ~zero only at equality") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        Tensor p = random_tensor({2, 6}, rng);
        Tensor q = random_tensor({2, 6}, rng);
        CHECK(eval_loss(p, q, 0.4) >= 0.0);
        CHECK(eval_loss(p, p, 0.4) <= kFreqLossEps);
        if (rep == 0) CHECK(eval_loss(p, q, 0.4) > 1e-3);
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged but advances the step") {
    ModelConfig c = tiny_config();
    ModelParams params = ModelParams::init(c, 8);
    ModelParams before = params;
    AdamState state = AdamState::init(params);
    TrainConfig tc;
    tc.learning_rate = 0.1;
    std::vector<Tensor> zeros;
    for (const auto& p : params.params) zeros.push_back(Tensor::zeros(p.value.shape()));
    adam_step(params, zeros, state, tc);
    CHECK(state.step == 1);
    for (std::size_t p = 0; p < params.size(); ++p)
        for (std::int64_t i = 0; i < params.params[p].value.numel(); ++i)
            CHECK(params.params[p].value.at(i) == before.params[p].value.at(i));
}

TEST_CASE("adam matches the hand-run recurrence on a scalar") {
    // one scalar parameter, constant gradient
    ModelParams params;
    params.params.push_back({"w", Tensor::scalar(1.0)});
    AdamState state = AdamState::init(params);
    TrainConfig tc;
    tc.learning_rate = 0.1;
    const double g = 0.35;

    double w = 1.0, m = 0.0, v = 0.0;
    for (int k = 1; k <= 7; ++k) {
        std::vector<Tensor> grads{Tensor::scalar(g)};
        adam_step(params, grads, state, tc);
        // hand recurrence
        m = tc.adam_beta1 * m + (1 - tc.adam_beta1) * g;
        v = tc.adam_beta2 * v + (1 - tc.adam_beta2) * g * g;
        const double mh = m / (1 - std::pow(tc.adam_beta1, k));
        const double vh = v / (1 - std::pow(tc.adam_beta2, k));
        w -= tc.learning_rate * mh / (std::sqrt(vh) + tc.adam_eps);
        CHECK(params.params[0].value.at(0) == doctest::Approx(w).epsilon(1e-15));
    }
    CHECK(state.step == 7);
}

TEST_CASE("adam rejects mismatched gradient shapes") {
    ModelParams params;
    params.params.push_back({"w", Tensor({2, 2})});
    AdamState state = AdamState::init(params);
    TrainConfig tc;
    std::vector<Tensor> bad{Tensor({3})};
    CHECK_THROWS_AS(adam_step(params, bad, state, tc), dimension_error);
}

TEST_CASE("training overfits the 8-sample sinusoid fixture") {
    ModelConfig c = tiny_config();
    c.hidden_dim = 8;
    c.ff_dim = 16;
    std::vector<Sample> train_set = sinusoid_samples(c, 8, 33);
    std::vector<Sample> val_set = sinusoid_samples(c, 4, 34);
    REQUIRE(train_set.size() == 8);
    TrainConfig tc;
    tc.learning_rate = 0.003;  // the |.|-based loss keeps Adam hopping at ~lr scale
    tc.epochs = 2000;          // batch 8 over 8 samples: one step per epoch
    tc.batch_size = 8;
    tc.alpha = 0.35;
    tc.seed = 7;
    TrainResult r = train_model(c, ModelParams::init(c, tc.seed), train_set, val_set, tc);
    CHECK(r.steps <= 2000);
    CHECK(r.log.size() == 2000);
    CHECK(r.log.back().train_loss < 0.01 * r.initial_train_loss);
}

TEST_CASE("zero learning rate is rejected, empty sets are rejected") {
    ModelConfig c = tiny_config();
    std::vector<Sample> samples = sinusoid_samples(c, 4, 3);
    TrainConfig tc;
    tc.learning_rate = 0.0;
    CHECK_THROWS_AS(train_model(c, ModelParams::init(c, 1), samples, samples, tc), config_error);
    TrainConfig ok;
    CHECK_THROWS_AS(train_model(c, ModelParams::init(c, 1), {}, samples, ok), config_error);
}

TEST_CASE("a tiny learning rate leaves the loss trace essentially constant") {
    // the spec's lr=0 boundary, expressed through the smallest usable rate
    ModelConfig c = tiny_config();
    std::vector<Sample> train_set = sinusoid_samples(c, 4, 5);
    TrainConfig tc;
    tc.learning_rate = 1e-300;
    tc.epochs = 3;
    tc.batch_size = 4;
    tc.seed = 2;
    TrainResult r = train_model(c, ModelParams::init(c, 2), train_set, train_set, tc);
    CHECK(r.log.size() == 3);
    for (const auto& e : r.log)
        CHECK(e.train_loss == doctest::Approx(r.initial_train_loss).epsilon(1e-9));
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
    ModelConfig c = tiny_config();
    std::vector<Sample> train_set = sinusoid_samples(c, 6, 11);
    std::vector<Sample> val_set = sinusoid_samples(c, 3, 12);
    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.epochs = 10;
    tc.batch_size = 3;
    tc.seed = 99;
    TrainResult a = train_model(c, ModelParams::init(c, tc.seed), train_set, val_set, tc);
    TrainResult b = train_model(c, ModelParams::init(c, tc.seed), train_set, val_set, tc);
    REQUIRE(a.best_params.size() == b.best_params.size());
    for (std::size_t p = 0; p < a.best_params.size(); ++p) {
        const Tensor& x = a.best_params.params[p].value;
        const Tensor& y = b.best_params.params[p].value;
        for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(x.at(i) == y.at(i));
    }
    for (std::size_t e = 0; e < a.log.size(); ++e) {
        CHECK(a.log[e].train_loss == b.log[e].train_loss);
        CHECK(a.log[e].val_loss == b.log[e].val_loss);
    }
}
