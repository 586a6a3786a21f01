// Command-line front end. Everything flows through the shared-library C API;
// this file only maps argv onto it and routes the JSON output.

#include <timebridge/timebridge.h>

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace {

int exit_code_for(tb_status status) {
    switch (status) {
        case TB_OK: return 0;
        case TB_ERR_CONFIG:
        case TB_ERR_INVALID_ARGUMENT: return 2;
        default: return 1;
    }
}

int finish(tb_status status, char* json, const std::string& out_path) {
    if (json) {
        if (out_path.empty()) {
            std::cout << json << "\n";
        } else {
            std::ofstream out(out_path);
            if (!out) {
                std::cerr << "error: cannot open --out file " << out_path << "\n";
                tb_string_free(json);
                return 1;
            }
            out << json << "\n";
        }
        tb_string_free(json);
    }
    if (status != TB_OK) {
        std::cerr << "error (" << tb_status_name(status) << "): " << tb_last_error() << "\n";
    }
    return exit_code_for(status);
}

struct ConfigHandle {
    tb_config* ptr = tb_config_new();
    ~ConfigHandle() { tb_config_free(ptr); }
};

// Loads --config if given, then applies `--key value` overrides and --seed.
// Returns a nonzero exit code on failure.
int build_config(ConfigHandle& cfg, const std::string& config_path,
                 const std::vector<std::string>& extras, const std::string& seed) {
    tb_status s = TB_OK;
    if (!config_path.empty()) s = tb_config_load_file(cfg.ptr, config_path.c_str());
    if (s == TB_OK && !seed.empty()) s = tb_config_set(cfg.ptr, "seed", seed.c_str());
    for (std::size_t i = 0; s == TB_OK && i < extras.size(); ++i) {
        const std::string& key = extras[i];
        if (key.rfind("--", 0) != 0 || i + 1 >= extras.size()) {
            std::cerr << "error: expected `--key value` overrides, got \"" << key << "\"\n";
            return 2;
        }
        s = tb_config_set(cfg.ptr, key.substr(2).c_str(), extras[++i].c_str());
    }
    if (s != TB_OK) {
        std::cerr << "error (" << tb_status_name(s) << "): " << tb_last_error() << "\n";
        return exit_code_for(s);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patch-attention forecaster with stationarity diagnostics"};
    app.require_subcommand(1);

    std::string config_path, out_path, seed;
    std::string checkpoint, split = "test";
    std::string csv, column, column_x, column_y, regression;
    std::string kind, out_csv, predicted_csv, realized_csv, benchmark_csv, equity_out;
    std::int64_t length = 10000, channels = 1, patch_len = 8, t_off = 100, i_off = 0, j_off = 16;
    std::int64_t trials = 50000, top_k = 50;
    int lags = 0, reps = 1;
    std::uint64_t rng_seed = 42;
    double sigma = 1.0, beta = 2.0, noise_sigma = 0.5, significance = 0.05;
    double periods_per_year = 252.0;
    bool detrended = false, pair_count = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_path, "Write the JSON document here instead of stdout");
    };

    CLI::App* train = app.add_subcommand("train", "Train a model from a run config");
    train->add_option("--config", config_path, "Run config file (key = value lines)");
    train->add_option("--seed", seed, "Override the config seed");
    train->allow_extras();  // --key value schema overrides
    add_common(train);

    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
    eval->add_option("--config", config_path, "Run config file");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval->add_option("--split", split, "train|val|test (default test)");
    eval->add_option("--seed", seed, "Override the config seed");
    eval->allow_extras();
    add_common(eval);

    CLI::App* gradcheck = app.add_subcommand("gradcheck",
                                             "Finite-difference check of every parameter gradient");
    gradcheck->add_option("--config", config_path, "Run config file");
    gradcheck->add_option("--seed", seed, "Override the config seed");
    gradcheck->allow_extras();
    add_common(gradcheck);

    CLI::App* adf = app.add_subcommand("adf", "Unit-root test (CSV column or generated series)");
    adf->add_option("--csv", csv, "CSV input (column mode)");
    adf->add_option("--column", column, "Column name (defaults to the only channel)");
    adf->add_option("--kind", kind, "random_walk|white_noise (synthetic mode)");
    adf->add_option("--T", length, "Series length for synthetic mode (default 10000)");
    adf->add_option("--reps", reps, "Repetitions over derived seeds (default 1)");
    adf->add_option("--sigma", sigma, "Innovation stddev (default 1)");
    adf->add_option("--regression", regression, "none|constant|constant_and_trend");
    adf->add_option("--lags", lags, "Lag count; -1 selects by AIC (default 0 synthetic, -1 CSV)");
    adf->add_option("--seed", rng_seed, "Seed (default 42)");
    add_common(adf);

    CLI::App* eg = app.add_subcommand("eg", "Residual cointegration test on CSV columns");
    eg->add_option("--csv", csv, "CSV input")->required();
    eg->add_option("--x", column_x, "Dependent column");
    eg->add_option("--y", column_y, "Regressor column");
    eg->add_flag("--pair-count", pair_count, "Count cointegrated verdicts over all ordered pairs");
    eg->add_option("--significance", significance, "0.01|0.05|0.10 (default 0.05)");
    add_common(eg);

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic series CSV");
    synth->add_option("--kind", kind,
                      "random_walk|white_noise|cointegrated_pair|trend_sinusoid|"
                      "cointegrated_channels")
        ->required();
    synth->add_option("--T", length, "Length (default 1000)");
    synth->add_option("--C", channels, "Channels (default 1)");
    synth->add_option("--sigma", sigma, "Innovation stddev (default 1)");
    synth->add_option("--beta", beta, "Pair slope (default 2)");
    synth->add_option("--noise-sigma", noise_sigma, "Stationary noise stddev (default 0.5)");
    synth->add_option("--seed", rng_seed, "Seed (default 42)");
    synth->add_option("--out-csv", out_csv, "Output CSV path")->required();
    add_common(synth);

    CLI::App* prop1 = app.add_subcommand("prop1",
                                         "Monte-Carlo patch score vs closed-form expectation");
    prop1->add_option("--S", patch_len, "Patch length (default 8)");
    prop1->add_option("--t", t_off, "Burn-in index (default 100)");
    prop1->add_option("--i", i_off, "First patch offset (default 0)");
    prop1->add_option("--j", j_off, "Second patch offset (default 16)");
    prop1->add_option("--sigma", sigma, "Innovation stddev (default 1)");
    prop1->add_flag("--detrended", detrended, "First-difference each patch");
    prop1->add_option("--trials", trials, "Monte-Carlo trials (default 50000)");
    prop1->add_option("--seed", rng_seed, "Seed (default 42)");
    add_common(prop1);

    CLI::App* backtest = app.add_subcommand("backtest", "Daily top-k rotation backtest");
    backtest->add_option("--predicted", predicted_csv, "Predicted returns CSV [days x stocks]")
        ->required();
    backtest->add_option("--realized", realized_csv, "Realized returns CSV [days x stocks]")
        ->required();
    backtest->add_option("--benchmark", benchmark_csv, "Benchmark daily returns CSV (optional)");
    backtest->add_option("--top-k", top_k, "Portfolio size (default 50)");
    backtest->add_option("--periods-per-year", periods_per_year, "Annualization factor (252)");
    backtest->add_option("--equity-out", equity_out, "Write the equity curve CSV here");
    add_common(backtest);

    CLI11_PARSE(app, argc, argv);

    char* json = nullptr;
    tb_status status = TB_OK;

    if (train->parsed() || eval->parsed() || gradcheck->parsed()) {
        ConfigHandle cfg;
        CLI::App* active = train->parsed() ? train : (eval->parsed() ? eval : gradcheck);
        if (int rc = build_config(cfg, config_path, active->remaining(), seed)) return rc;
        if (train->parsed()) status = tb_cmd_train(cfg.ptr, &json);
        else if (eval->parsed()) status = tb_cmd_eval(cfg.ptr, checkpoint.c_str(), split.c_str(), &json);
        else status = tb_cmd_gradcheck(cfg.ptr, &json);
    } else if (adf->parsed()) {
        if (!kind.empty()) {
            if (adf->count("--lags") == 0) lags = 0;
            status = tb_cmd_adf_synthetic(kind.c_str(), length, reps, sigma,
                                          regression.empty() ? "constant" : regression.c_str(),
                                          lags, rng_seed, &json);
        } else {
            if (adf->count("--lags") == 0) lags = -1;
            status = tb_cmd_adf_csv(csv.c_str(), column.empty() ? nullptr : column.c_str(),
                                    regression.empty() ? "constant" : regression.c_str(), lags,
                                    &json);
        }
    } else if (eg->parsed()) {
        if (pair_count) {
            status = tb_cmd_eg_pair_count(csv.c_str(), significance, &json);
        } else {
            status = tb_cmd_eg_csv(csv.c_str(), column_x.empty() ? nullptr : column_x.c_str(),
                                   column_y.empty() ? nullptr : column_y.c_str(), significance,
                                   &json);
        }
    } else if (synth->parsed()) {
        status = tb_cmd_synth(kind.c_str(), length, channels, sigma, beta, noise_sigma, rng_seed,
                              out_csv.c_str(), &json);
    } else if (prop1->parsed()) {
        status = tb_cmd_prop1(patch_len, t_off, i_off, j_off, sigma, detrended ? 1 : 0, trials,
                              rng_seed, &json);
    } else if (backtest->parsed()) {
        status = tb_cmd_backtest(predicted_csv.c_str(), realized_csv.c_str(),
                                 benchmark_csv.empty() ? nullptr : benchmark_csv.c_str(), top_k,
                                 equity_out.empty() ? nullptr : equity_out.c_str(), &json);
    }

    return finish(status, json, out_path);
}
