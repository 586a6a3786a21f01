#pragma once

#include <cstdint>
#include <string>

#include "runconfig.hpp"
#include "stats.hpp"

namespace timebridge::workflows {

// Each command returns one complete JSON document; files named in the options
// are written as side effects. Failures throw the core error types.

std::string cmd_train(const RunConfig& config);

std::string cmd_eval(const RunConfig& config, const std::string& checkpoint_path,
                     const std::string& split);

struct GradcheckOutcome {
    std::string json;
    bool pass = false;
    double max_rel_err = 0.0;
};
GradcheckOutcome cmd_gradcheck(const RunConfig& config);

struct AdfCsvOptions {
    std::string csv_path;
    std::string column;  // empty means the only channel
    std::string regression = "constant";
    int lags = kAutoLags;
};
std::string cmd_adf_csv(const AdfCsvOptions& opt);

struct AdfSyntheticOptions {
    std::string kind = "random_walk";  // random_walk | white_noise
    std::int64_t length = 10000;
    int reps = 1;
    double sigma = 1.0;
    std::string regression = "constant";
    int lags = 0;
    std::uint64_t seed = 42;
};
std::string cmd_adf_synthetic(const AdfSyntheticOptions& opt);

struct EgOptions {
    std::string csv_path;
    std::string column_x;
    std::string column_y;
    bool pair_count = false;  // run over all ordered channel pairs instead
    double significance = 0.05;
};
std::string cmd_eg(const EgOptions& opt);

struct SynthOptions {
    std::string kind = "random_walk";  // random_walk | white_noise | cointegrated_pair |
                                       // trend_sinusoid | cointegrated_channels
    std::int64_t length = 1000;
    std::int64_t channels = 1;
    double sigma = 1.0;
    double beta = 2.0;
    double noise_sigma = 0.5;
    std::uint64_t seed = 42;
    std::string out_csv;  // required
};
std::string cmd_synth(const SynthOptions& opt);

struct Prop1Options {
    std::int64_t patch_len = 8;
    std::int64_t t = 100;
    std::int64_t i = 0;
    std::int64_t j = 16;
    double sigma = 1.0;
    bool detrended = false;
    std::int64_t trials = 50000;
    std::uint64_t seed = 42;
};
std::string cmd_prop1(const Prop1Options& opt);

struct BacktestOptions {
    std::string predicted_csv;
    std::string realized_csv;
    std::string benchmark_csv;  // optional; first value column is used
    std::int64_t top_k = 50;
    double periods_per_year = 252.0;
    std::string equity_out_csv;  // optional equity-curve table
};
std::string cmd_backtest(const BacktestOptions& opt);

}  // namespace timebridge::workflows
