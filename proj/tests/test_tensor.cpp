#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/rng.hpp"
#include "core/tape.hpp"

using namespace timebridge;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) t.at(i) = scale * rng.normal();
    return t;
}

// FD harness for a single-input op: loss = sum(weights .* op(x)). The random
// weights make the cotangent non-uniform, which exercises the full backward
// rule rather than just its row sums.
double op_max_rel_err(Tensor x, const std::function<Var(Tape&, Var)>& op, std::uint64_t seed,
                      double eps = 1e-5) {
    Rng rng(seed);
    Tensor weights;
    {
        Tape probe;
        Var vx = probe.leaf(x);
        weights = random_tensor(probe.value(op(probe, vx)).shape(), rng);
    }
    auto objective = [&]() {
        Tape tape;
        Var vx = tape.leaf(x);
        Var y = op(tape, vx);
        Var w = tape.constant(weights);
        return tape.value(tape.sum_all(tape.mul(y, w))).at(0);
    };
    Tape tape;
    Var vx = tape.leaf(x);
    Var y = op(tape, vx);
    Var w = tape.constant(weights);
    tape.backward(tape.sum_all(tape.mul(y, w)));
    std::vector<Tensor> analytic{tape.grad(vx)};
    std::vector<std::pair<std::string, Tensor*>> params{{"x", &x}};
    return finite_diff_check(objective, params, analytic, eps).max_rel_err;
}

}  // namespace

TEST_CASE("tensor shape and data invariants") {
    Tensor t({2, 3});
    CHECK(t.numel() == 6);
    CHECK_THROWS_AS(Tensor({2, 0}), dimension_error);
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), dimension_error);
    CHECK_THROWS_AS(t.reshaped({4, 2}), dimension_error);
    Tensor r = t.reshaped({3, 2});
    CHECK(r.dim(0) == 3);
}

TEST_CASE("matmul identity and projector") {
    Tape t;
    Var eye = t.leaf(Tensor::identity(2));
    Var a = t.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
    const Tensor& prod = t.value(t.matmul(eye, a));
    CHECK(prod.at(0, 0) == 1.0);
    CHECK(prod.at(0, 1) == 2.0);
    CHECK(prod.at(1, 0) == 3.0);
    CHECK(prod.at(1, 1) == 4.0);

    Var proj = t.leaf(Tensor({2, 2}, {1, 0, 0, 0}));
    Var v = t.leaf(Tensor({2, 1}, {5, 7}));
    const Tensor& out = t.value(t.matmul(proj, v));
    CHECK(out.at(0) == 5.0);
    CHECK(out.at(1) == 0.0);
}

TEST_CASE("matmul shape error names both shapes") {
    Tape t;
    Var a = t.leaf(Tensor({2, 3}));
    Var b = t.leaf(Tensor({2, 3}));
    CHECK_THROWS_WITH_AS(t.matmul(a, b), doctest::Contains("[2x3]"), dimension_error);
}

TEST_CASE("matmul gradient matches finite differences") {
    Rng rng(101);
    Tensor a = random_tensor({3, 3}, rng);
    Tensor b = random_tensor({3, 3}, rng);
    // grad wrt left operand with the right held constant, then vice versa
    const double err_a = op_max_rel_err(
        a, [&](Tape& t, Var x) { return t.matmul(x, t.constant(b)); }, 11);
    const double err_b = op_max_rel_err(
        b, [&](Tape& t, Var x) { return t.matmul(t.constant(a), x); }, 12);
    CHECK(err_a < 1e-6);
    CHECK(err_b < 1e-6);
}

TEST_CASE("softmax uniform and stabilized") {
    Tape t;
    Var x = t.leaf(Tensor({3}, {0, 0, 0}));
    const Tensor& y = t.value(t.softmax(x, 0));
    CHECK(y.at(0) == doctest::Approx(1.0 / 3).epsilon(1e-12));

    Var big = t.leaf(Tensor({2}, {1000, 0}));
    const Tensor& z = t.value(t.softmax(big, 0));
    CHECK(std::isfinite(z.at(0)));
    CHECK(z.at(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z.at(1) < 1e-300);
}

TEST_CASE("softmax rows sum to one on random inputs") {
    Rng rng(55);
    for (int rep = 0; rep < 20; ++rep) {
        Tape t;
        Tensor x = random_tensor({4, 6}, rng, 3.0);
        const Tensor& y = t.value(t.softmax(t.leaf(x), 1));
        for (std::int64_t r = 0; r < 4; ++r) {
            double s = 0.0;
            for (std::int64_t c = 0; c < 6; ++c) s += y.at(r, c);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("softmax gradient matches finite differences") {
    Rng rng(77);
    Tensor x = random_tensor({5}, rng);
    const double err = op_max_rel_err(x, [](Tape& t, Var v) { return t.softmax(v, 0); }, 13);
    CHECK(err < 1e-6);
}

TEST_CASE("layer_norm constant slice and already-normalized slice") {
    Tape t;
    Var gain = t.leaf(Tensor({3}, {1, 1, 1}));
    Var bias = t.leaf(Tensor({3}, {0, 0, 0}));
    Var x = t.leaf(Tensor({3}, {5, 5, 5}));
    const Tensor& y = t.value(t.layer_norm(x, 0, 1e-5, gain, bias));
    CHECK(y.at(0) == 0.0);
    CHECK(y.at(2) == 0.0);

    Var g2 = t.leaf(Tensor({2}, {1, 1}));
    Var b2 = t.leaf(Tensor({2}, {0, 0}));
    Var x2 = t.leaf(Tensor({2}, {1, -1}));
    const Tensor& y2 = t.value(t.layer_norm(x2, 0, 1e-12, g2, b2));
    CHECK(y2.at(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(y2.at(1) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("layer_norm gradient matches finite differences") {
    Rng rng(99);
    Tensor x = random_tensor({3, 4}, rng);
    Tensor gain = random_tensor({4}, rng);
    Tensor bias = random_tensor({4}, rng);
    const double err_x = op_max_rel_err(
        x, [&](Tape& t, Var v) { return t.layer_norm(v, 1, 1e-5, t.constant(gain), t.constant(bias)); },
        21);
    const double err_gain = op_max_rel_err(
        gain,
        [&](Tape& t, Var v) { return t.layer_norm(t.constant(x), 1, 1e-5, v, t.constant(bias)); },
        22);
    CHECK(err_x < 1e-5);
    CHECK(err_gain < 1e-5);
}

TEST_CASE("avg_pool hand-evaluated windows with replicate padding") {
    Tape t;
    Var x = t.leaf(Tensor({5}, {1, 2, 3, 4, 5}));
    const Tensor& y = t.value(t.avg_pool(x, 0, 3));
    CHECK(y.at(0) == doctest::Approx(4.0 / 3).epsilon(1e-15));
    CHECK(y.at(1) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(y.at(2) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(y.at(3) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(y.at(4) == doctest::Approx(14.0 / 3).epsilon(1e-15));
}

TEST_CASE("avg_pool maps constant inputs to themselves exactly") {
    const double c = 0.1;  // not a power of two: catches naive sum/k rounding
    Tape t;
    Var x = t.leaf(Tensor::full({7}, c));
    for (std::int64_t kernel : {1, 3, 5, 7}) {
        const Tensor& y = t.value(t.avg_pool(x, 0, kernel));
        for (std::int64_t i = 0; i < 7; ++i) CHECK(y.at(i) == c);
    }
}

TEST_CASE("avg_pool kernel=1 is the identity") {
    Tape t;
    Var x = t.leaf(Tensor({4}, {3, 1, 4, 1}));
    const Tensor& y = t.value(t.avg_pool(x, 0, 1));
    for (std::int64_t i = 0; i < 4; ++i) CHECK(y.at(i) == t.value(x).at(i));
}

TEST_CASE("avg_pool rejects even kernels and kernels longer than the axis") {
    Tape t;
    Var x = t.leaf(Tensor({4}, {1, 2, 3, 4}));
    CHECK_THROWS_AS(t.avg_pool(x, 0, 2), config_error);
    CHECK_THROWS_AS(t.avg_pool(x, 0, 5), config_error);
}

TEST_CASE("avg_pool gradient matches finite differences") {
    Rng rng(123);
    Tensor x = random_tensor({7}, rng);
    const double err = op_max_rel_err(x, [](Tape& t, Var v) { return t.avg_pool(v, 0, 3); }, 31);
    CHECK(err < 1e-7);
}

TEST_CASE("dft constant input is DC only") {
    const double c = 2.5;
    ComplexPair out = dft_real(Tensor::full({4}, c));
    CHECK(out.real.at(0) == doctest::Approx(4 * c).epsilon(1e-12));
    for (std::int64_t k = 1; k < 4; ++k) {
        CHECK(out.real.at(k) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(out.imag.at(k) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dft impulse is flat") {
    ComplexPair out = dft_real(Tensor({4}, {1, 0, 0, 0}));
    for (std::int64_t k = 0; k < 4; ++k) {
        CHECK(out.real.at(k) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(out.imag.at(k) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dft satisfies Parseval and linearity") {
    Rng rng(2024);
    Tensor x = random_tensor({8}, rng);
    Tensor y = random_tensor({8}, rng);
    ComplexPair fx = dft_real(x);
    double freq_energy = 0.0, time_energy = 0.0;
    for (std::int64_t k = 0; k < 8; ++k) {
        freq_energy += fx.real.at(k) * fx.real.at(k) + fx.imag.at(k) * fx.imag.at(k);
        time_energy += x.at(k) * x.at(k);
    }
    CHECK(freq_energy == doctest::Approx(8.0 * time_energy).epsilon(1e-10));

    const double a = 1.7, b = -0.3;
    Tensor mix({8});
    for (std::int64_t k = 0; k < 8; ++k) mix.at(k) = a * x.at(k) + b * y.at(k);
    ComplexPair fmix = dft_real(mix);
    ComplexPair fy = dft_real(y);
    for (std::int64_t k = 0; k < 8; ++k) {
        CHECK(fmix.real.at(k) ==
              doctest::Approx(a * fx.real.at(k) + b * fy.real.at(k)).epsilon(1e-10));
        CHECK(fmix.imag.at(k) ==
              doctest::Approx(a * fx.imag.at(k) + b * fy.imag.at(k)).epsilon(1e-10));
    }
}

TEST_CASE("dft gradients match finite differences") {
    Rng rng(31);
    Tensor x = random_tensor({6}, rng);
    const double err_re =
        op_max_rel_err(x, [](Tape& t, Var v) { return t.dft_real_part(v, 0); }, 41);
    const double err_im =
        op_max_rel_err(x, [](Tape& t, Var v) { return t.dft_imag_part(v, 0); }, 42);
    CHECK(err_re < 1e-6);
    CHECK(err_im < 1e-6);
}

TEST_CASE("backward of sum gives ones; x*x gives 2x") {
    Tape t;
    Var x = t.leaf(Tensor({3}, {1, 2, 3}));
    t.backward(t.sum_all(x));
    Tensor g = t.grad(x);
    CHECK(g.at(0) == 1.0);
    CHECK(g.at(1) == 1.0);
    CHECK(g.at(2) == 1.0);

    Tape t2;
    Var s = t2.leaf(Tensor::scalar(3.0));
    t2.backward(t2.sum_all(t2.mul(s, s)));
    CHECK(t2.grad(s).at(0) == 6.0);
}

TEST_CASE("backward requires a scalar loss") {
    Tape t;
    Var x = t.leaf(Tensor({2}, {1, 2}));
    CHECK_THROWS_AS(t.backward(x), contract_error);
}

TEST_CASE("repeated backward calls are idempotent") {
    Tape t;
    Var x = t.leaf(Tensor({2}, {2, -1}));
    Var loss = t.sum_all(t.mul(x, x));
    t.backward(loss);
    Tensor g1 = t.grad(x);
    t.backward(loss);
    Tensor g2 = t.grad(x);
    CHECK(g1.at(0) == g2.at(0));
    CHECK(g1.at(1) == g2.at(1));
}

TEST_CASE("finite_diff_check on a quadratic is essentially exact") {
    Tensor p({4}, {1.0, -2.0, 0.5, 3.0});
    auto objective = [&]() {
        double s = 0.0;
        for (std::int64_t i = 0; i < 4; ++i) s += 0.5 * p.at(i) * p.at(i);
        return s;
    };
    std::vector<Tensor> analytic{p};  // gradient of 0.5*||p||^2 is p itself
    std::vector<std::pair<std::string, Tensor*>> params{{"p", &p}};
    FiniteDiffReport r = finite_diff_check(objective, params, analytic, 1e-5);
    CHECK(r.max_rel_err < 1e-9);
}

TEST_CASE("finite_diff_check on a softmax cross-entropy toy") {
    Rng rng(404);
    Tensor logits = random_tensor({5}, rng);
    const int label = 2;
    auto objective = [&]() {
        Tape t;
        Var x = t.leaf(logits);
        Var probs = t.softmax(x, 0);
        // -log p[label] via weighted sum of log-probs would need a log op;
        // use the margin form instead: sum(exp) trick folded into softmax
        // and pick out the label probability.
        Tensor pick({5});
        pick.at(label) = 1.0;
        const double p = t.value(t.sum_all(t.mul(probs, t.constant(pick)))).at(0);
        return -std::log(p);
    };
    Tape t;
    Var x = t.leaf(logits);
    Var probs = t.softmax(x, 0);
    Tensor pick({5});
    pick.at(label) = 1.0;
    // analytic gradient of -log softmax: p - onehot
    Tensor analytic({5});
    for (std::int64_t i = 0; i < 5; ++i) analytic.at(i) = t.value(probs).at(i) - pick.at(i);
    std::vector<std::pair<std::string, Tensor*>> params{{"logits", &logits}};
    FiniteDiffReport r = finite_diff_check(objective, params, {analytic}, 1e-5);
    CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("every recorded op matches finite differences on random shapes") {
    // property test over the op set on random shapes <= 8 per dim
    Rng rng(7070);
    for (int rep = 0; rep < 8; ++rep) {
        const std::int64_t r = 1 + static_cast<std::int64_t>(rng.next_u64() % 8);
        const std::int64_t c = 1 + static_cast<std::int64_t>(rng.next_u64() % 8);
        Tensor m = random_tensor({r, c}, rng);
        Tensor m2 = random_tensor({r, c}, rng);
        Tensor vcol = random_tensor({c}, rng);
        const std::uint64_t s = rng.next_u64();

        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.add(v, t.constant(m2)); }, s) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.sub(t.constant(m2), v); }, s + 1) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.mul(v, t.constant(m2)); }, s + 2) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.scale(v, -1.37); }, s + 3) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.transpose(v); }, s + 4) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.reshape(v, {c, r}); }, s + 5) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.add_rowvec(v, t.constant(vcol)); },
                             s + 6) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.gelu(v); }, s + 7) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.softmax(v, 1); }, s + 8) < 1e-5);
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.mean_all(v); }, s + 9) < 1e-5);
        if (r >= 2) {
            CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.slice_rows(v, 1, r); }, s + 10) <
                  1e-5);
            CHECK(op_max_rel_err(
                      m, [&](Tape& t, Var v) { return t.concat_rows({v, t.constant(m2)}); },
                      s + 11) < 1e-5);
        }
        if (c >= 2) {
            CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.slice_cols(v, 0, c - 1); },
                                 s + 12) < 1e-5);
            CHECK(op_max_rel_err(
                      m, [&](Tape& t, Var v) { return t.concat_cols({t.constant(m2), v}); },
                      s + 13) < 1e-5);
        }
        const std::int64_t kernel = std::min<std::int64_t>(3, (r % 2 == 1) ? r : r - 1);
        if (kernel >= 1) {
            CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.avg_pool(v, 0, kernel); },
                                 s + 14) < 1e-5);
        }
        CHECK(op_max_rel_err(m, [&](Tape& t, Var v) { return t.dft_real_part(v, 1); }, s + 15) <
              1e-5);
        CHECK(op_max_rel_err(
                  m,
                  [&](Tape& t, Var v) {
                      return t.complex_modulus(v, t.constant(m2), 1e-12);
                  },
                  s + 16) < 1e-5);
        // |x| away from ties
        Tensor shifted = m;
        for (std::int64_t idx = 0; idx < shifted.numel(); ++idx)
            shifted.at(idx) += (shifted.at(idx) >= 0 ? 0.5 : -0.5);
        CHECK(op_max_rel_err(shifted, [&](Tape& t, Var v) { return t.abs(v); }, s + 17) < 1e-5);
    }
}

TEST_CASE("abs has subgradient zero at exact ties") {
    Tape t;
    Var x = t.leaf(Tensor({3}, {0.0, 2.0, -2.0}));
    t.backward(t.sum_all(t.abs(x)));
    Tensor g = t.grad(x);
    CHECK(g.at(0) == 0.0);
    CHECK(g.at(1) == 1.0);
    CHECK(g.at(2) == -1.0);
}
