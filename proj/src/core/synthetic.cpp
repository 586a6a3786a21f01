#include "synthetic.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "error.hpp"
#include "rng.hpp"

namespace timebridge {

namespace {

constexpr std::int64_t kChunkTrials = 1024;

// Per-trial dot product of two patches of a fresh path. Path indices are
// 1-based times; X_0 = 0 is implicit.
double one_trial(std::int64_t S, std::int64_t t, std::int64_t i, std::int64_t j, double sigma,
                 bool detrended, std::uint64_t trial_seed) {
    Rng rng(trial_seed);
    const std::int64_t last = t + std::max(i, j) + S;
    std::vector<double> x(static_cast<std::size_t>(last) + 1);
    x[0] = 0.0;
    for (std::int64_t k = 1; k <= last; ++k)
        x[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k - 1)] + sigma * rng.normal();
    double dot = 0.0;
    if (!detrended) {
        for (std::int64_t s = 1; s <= S; ++s)
            dot += x[static_cast<std::size_t>(t + i + s)] * x[static_cast<std::size_t>(t + j + s)];
    } else {
        for (std::int64_t s = 1; s <= S; ++s) {
            const double di = x[static_cast<std::size_t>(t + i + s)] - x[static_cast<std::size_t>(t + i + s - 1)];
            const double dj = x[static_cast<std::size_t>(t + j + s)] - x[static_cast<std::size_t>(t + j + s - 1)];
            dot += di * dj;
        }
    }
    return dot;
}

struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

int max_worker_threads() {
    if (const char* env = std::getenv("TIMEBRIDGE_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

std::vector<double> gen_random_walk(std::int64_t T, double sigma, std::uint64_t seed) {
    if (T < 2) throw config_error("gen_random_walk: T must be >= 2");
    if (sigma <= 0) throw config_error("gen_random_walk: sigma must be > 0");
    Rng rng(seed);
    std::vector<double> x(static_cast<std::size_t>(T));
    double level = 0.0;
    for (std::int64_t t = 0; t < T; ++t) {
        level += sigma * rng.normal();
        x[static_cast<std::size_t>(t)] = level;
    }
    return x;
}

std::vector<double> gen_white_noise(std::int64_t T, double sigma, std::uint64_t seed) {
    if (T < 2) throw config_error("gen_white_noise: T must be >= 2");
    if (sigma <= 0) throw config_error("gen_white_noise: sigma must be > 0");
    Rng rng(seed);
    std::vector<double> x(static_cast<std::size_t>(T));
    for (auto& v : x) v = sigma * rng.normal();
    return x;
}

CointegratedPair gen_cointegrated_pair(std::int64_t T, double beta, double noise_sigma,
                                       std::uint64_t seed) {
    if (T < 2) throw config_error("gen_cointegrated_pair: T must be >= 2");
    if (noise_sigma <= 0) throw config_error("gen_cointegrated_pair: noise_sigma must be > 0");
    CointegratedPair out;
    out.y = gen_random_walk(T, 1.0, derive_seed(seed, 0));
    Rng noise(derive_seed(seed, 1));
    out.x.resize(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t)
        out.x[static_cast<std::size_t>(t)] =
            beta * out.y[static_cast<std::size_t>(t)] + noise_sigma * noise.normal();
    return out;
}

double spurious_score_expectation(std::int64_t S, std::int64_t t, std::int64_t i, std::int64_t j,
                                  double sigma) {
    if (S < 1) throw config_error("spurious_score_expectation: S must be >= 1");
    if (t < 0 || i < 0 || j < 0)
        throw config_error("spurious_score_expectation: t, i, j must be >= 0");
    const double Sd = static_cast<double>(S);
    const double td = static_cast<double>(t);
    const double m = static_cast<double>(std::min(i, j));
    return sigma * sigma * (Sd * m + (Sd * Sd + 2.0 * Sd * td + Sd) / 2.0);
}

double detrended_score_expectation(std::int64_t S, std::int64_t i, std::int64_t j, double sigma) {
    return i == j ? sigma * sigma * static_cast<double>(S) : 0.0;
}

double monte_carlo_patch_score(std::int64_t S, std::int64_t t, std::int64_t i, std::int64_t j,
                               double sigma, bool detrended, std::int64_t trials,
                               std::uint64_t seed) {
    if (trials < 1000) throw config_error("monte_carlo_patch_score: need at least 1000 trials");
    if (S < 1 || t < 0 || i < 0 || j < 0)
        throw config_error("monte_carlo_patch_score: S >= 1 and t, i, j >= 0 required");

    const std::int64_t n_chunks = (trials + kChunkTrials - 1) / kChunkTrials;
    std::vector<double> chunk_sums(static_cast<std::size_t>(n_chunks), 0.0);

    auto run_chunk = [&](std::int64_t chunk) {
        const std::int64_t begin = chunk * kChunkTrials;
        const std::int64_t end = std::min(trials, begin + kChunkTrials);
        KahanSum acc;
        for (std::int64_t trial = begin; trial < end; ++trial)
            acc.add(one_trial(S, t, i, j, sigma, detrended,
                              derive_seed(seed, static_cast<std::uint64_t>(trial))));
        chunk_sums[static_cast<std::size_t>(chunk)] = acc.sum;
    };

    const int workers = std::min<std::int64_t>(max_worker_threads(), n_chunks);
    if (workers <= 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::int64_t c = w; c < n_chunks; c += workers) run_chunk(c);
            });
        }
        for (auto& th : pool) th.join();
    }

    // fixed chunk order: the mean is bit-identical for any worker count
    KahanSum total;
    for (double s : chunk_sums) total.add(s);
    return total.sum / static_cast<double>(trials);
}

TimeSeriesFrame gen_trend_sinusoid(std::int64_t T, std::int64_t C, std::uint64_t seed,
                                   double noise_sigma) {
    if (T < 2 || C < 1) throw config_error("gen_trend_sinusoid: need T >= 2 and C >= 1");
    TimeSeriesFrame frame;
    Tensor vals({T, C});
    for (std::int64_t c = 0; c < C; ++c) {
        frame.channel_names.push_back("ch" + std::to_string(c));
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        // linear trend = intercept + slope * t; channels sit at distinct levels
        const double intercept = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform_range(5.0, 15.0);
        const double slope = rng.uniform_range(-0.01, 0.01);
        const double amp1 = rng.uniform_range(0.5, 1.5);
        const double amp2 = rng.uniform_range(0.2, 0.8);
        const double period1 = rng.uniform_range(16.0, 48.0);
        const double period2 = rng.uniform_range(5.0, 12.0);
        const double phase1 = rng.uniform_range(0.0, 2.0 * M_PI);
        const double phase2 = rng.uniform_range(0.0, 2.0 * M_PI);
        for (std::int64_t t = 0; t < T; ++t) {
            const double td = static_cast<double>(t);
            double v = intercept + slope * td +
                       amp1 * std::sin(2.0 * M_PI * td / period1 + phase1) +
                       amp2 * std::sin(2.0 * M_PI * td / period2 + phase2);
            if (noise_sigma > 0) v += noise_sigma * rng.normal();
            vals.at(t, c) = v;
        }
    }
    frame.values = std::move(vals);
    return frame;
}

TimeSeriesFrame gen_cointegrated_channels(std::int64_t T, std::int64_t C, std::uint64_t seed,
                                          double trend_sigma, double noise_sigma,
                                          double noise_ar1, std::int64_t n_groups,
                                          double noise_ar2) {
    if (T < 2 || C < 1) throw config_error("gen_cointegrated_channels: need T >= 2 and C >= 1");
    // AR(2) stationarity triangle
    if (std::fabs(noise_ar2) >= 1.0 || noise_ar1 + noise_ar2 >= 1.0 ||
        noise_ar2 - noise_ar1 >= 1.0) {
        throw config_error("gen_cointegrated_channels: AR(2) noise coefficients not stationary");
    }
    if (n_groups < 1 || n_groups > C)
        throw config_error("gen_cointegrated_channels: need 1 <= n_groups <= C");
    std::vector<std::vector<double>> trends;
    trends.reserve(static_cast<std::size_t>(n_groups));
    for (std::int64_t g = 0; g < n_groups; ++g)
        trends.push_back(gen_random_walk(T, trend_sigma,
                                         derive_seed(seed, static_cast<std::uint64_t>(g))));
    TimeSeriesFrame frame;
    Tensor vals({T, C});
    for (std::int64_t c = 0; c < C; ++c) {
        frame.channel_names.push_back("ch" + std::to_string(c));
        const auto& trend = trends[static_cast<std::size_t>(c % n_groups)];
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c) + 64));
        const double loading = rng.uniform_range(0.5, 1.5);
        double noise = 0.0, noise_prev = 0.0;
        for (std::int64_t t = 0; t < T; ++t) {
            const double next = noise_ar1 * noise + noise_ar2 * noise_prev +
                                noise_sigma * rng.normal();
            noise_prev = noise;
            noise = next;
            vals.at(t, c) = loading * trend[static_cast<std::size_t>(t)] + noise;
        }
    }
    frame.values = std::move(vals);
    return frame;
}

}  // namespace timebridge
