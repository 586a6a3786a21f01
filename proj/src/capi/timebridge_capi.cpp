#include "timebridge/timebridge.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "core/error.hpp"
#include "core/runconfig.hpp"
#include "core/workflows.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

tb_status fail(tb_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

// Runs a workflow, mapping the core exception taxonomy onto status codes.
template <typename Fn>
tb_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return TB_OK;
    } catch (const timebridge::config_error& e) {
        return fail(TB_ERR_CONFIG, e.what());
    } catch (const timebridge::io_error& e) {
        return fail(TB_ERR_IO, e.what());
    } catch (const timebridge::parse_error& e) {
        return fail(TB_ERR_PARSE, e.what());
    } catch (const timebridge::dimension_error& e) {
        return fail(TB_ERR_DIMENSION, e.what());
    } catch (const timebridge::singular_error& e) {
        return fail(TB_ERR_SINGULAR, e.what());
    } catch (const timebridge::degenerate_error& e) {
        return fail(TB_ERR_DEGENERATE, e.what());
    } catch (const std::exception& e) {
        return fail(TB_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(TB_ERR_INTERNAL, "unknown failure");
    }
}

tb_status require(bool ok, const char* what) {
    return ok ? TB_OK : fail(TB_ERR_INVALID_ARGUMENT, std::string("null argument: ") + what);
}

}  // namespace

struct tb_config {
    timebridge::RunConfig impl;
};

extern "C" {

const char* tb_status_name(tb_status status) {
    switch (status) {
        case TB_OK: return "ok";
        case TB_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case TB_ERR_CONFIG: return "config_error";
        case TB_ERR_IO: return "io_error";
        case TB_ERR_PARSE: return "parse_error";
        case TB_ERR_DIMENSION: return "dimension_error";
        case TB_ERR_SINGULAR: return "singular_error";
        case TB_ERR_DEGENERATE: return "degenerate_error";
        case TB_ERR_THRESHOLD: return "threshold_exceeded";
        case TB_ERR_INTERNAL: return "internal_error";
    }
    return "unknown";
}

const char* tb_last_error(void) { return g_last_error.c_str(); }

const char* tb_version(void) { return "1.0.0"; }

void tb_string_free(char* s) { std::free(s); }

tb_config* tb_config_new(void) { return new (std::nothrow) tb_config(); }

void tb_config_free(tb_config* config) { delete config; }

tb_status tb_config_load_file(tb_config* config, const char* path) {
    if (auto s = require(config && path, "config/path")) return s;
    return guarded([&] { config->impl.load_file(path); });
}

tb_status tb_config_set(tb_config* config, const char* key, const char* value) {
    if (auto s = require(config && key && value, "config/key/value")) return s;
    return guarded([&] { config->impl.set(key, value); });
}

tb_status tb_config_get(const tb_config* config, const char* key, char** out_value) {
    if (auto s = require(config && key && out_value, "config/key/out_value")) return s;
    return guarded([&] { *out_value = dup_string(config->impl.get(key)); });
}

tb_status tb_config_text(const tb_config* config, char** out_text) {
    if (auto s = require(config && out_text, "config/out_text")) return s;
    return guarded([&] { *out_text = dup_string(config->impl.to_text()); });
}

tb_status tb_cmd_train(const tb_config* config, char** out_json) {
    if (auto s = require(config && out_json, "config/out_json")) return s;
    return guarded([&] { *out_json = dup_string(timebridge::workflows::cmd_train(config->impl)); });
}

tb_status tb_cmd_eval(const tb_config* config, const char* checkpoint_path, const char* split,
                      char** out_json) {
    if (auto s = require(config && checkpoint_path && split && out_json,
                         "config/checkpoint/split/out_json"))
        return s;
    return guarded([&] {
        *out_json = dup_string(timebridge::workflows::cmd_eval(config->impl, checkpoint_path, split));
    });
}

tb_status tb_cmd_gradcheck(const tb_config* config, char** out_json) {
    if (auto s = require(config && out_json, "config/out_json")) return s;
    bool pass = false;
    double max_rel_err = 0.0;
    const tb_status status = guarded([&] {
        timebridge::workflows::GradcheckOutcome outcome =
            timebridge::workflows::cmd_gradcheck(config->impl);
        *out_json = dup_string(outcome.json);
        pass = outcome.pass;
        max_rel_err = outcome.max_rel_err;
    });
    if (status != TB_OK) return status;
    if (!pass) {
        return fail(TB_ERR_THRESHOLD,
                    "gradient check exceeded threshold: max_rel_err = " +
                        std::to_string(max_rel_err));
    }
    return TB_OK;
}

tb_status tb_cmd_adf_csv(const char* csv_path, const char* column, const char* regression,
                         int lags, char** out_json) {
    if (auto s = require(csv_path && out_json, "csv_path/out_json")) return s;
    return guarded([&] {
        timebridge::workflows::AdfCsvOptions opt;
        opt.csv_path = csv_path;
        if (column) opt.column = column;
        if (regression) opt.regression = regression;
        opt.lags = lags;
        *out_json = dup_string(timebridge::workflows::cmd_adf_csv(opt));
    });
}

tb_status tb_cmd_adf_synthetic(const char* kind, int64_t length, int reps, double sigma,
                               const char* regression, int lags, uint64_t seed, char** out_json) {
    if (auto s = require(kind && out_json, "kind/out_json")) return s;
    return guarded([&] {
        timebridge::workflows::AdfSyntheticOptions opt;
        opt.kind = kind;
        opt.length = length;
        opt.reps = reps;
        opt.sigma = sigma;
        if (regression) opt.regression = regression;
        opt.lags = lags;
        opt.seed = seed;
        *out_json = dup_string(timebridge::workflows::cmd_adf_synthetic(opt));
    });
}

tb_status tb_cmd_eg_csv(const char* csv_path, const char* column_x, const char* column_y,
                        double significance, char** out_json) {
    if (auto s = require(csv_path && out_json, "csv_path/out_json")) return s;
    return guarded([&] {
        timebridge::workflows::EgOptions opt;
        opt.csv_path = csv_path;
        if (column_x) opt.column_x = column_x;
        if (column_y) opt.column_y = column_y;
        opt.significance = significance;
        *out_json = dup_string(timebridge::workflows::cmd_eg(opt));
    });
}

tb_status tb_cmd_eg_pair_count(const char* csv_path, double significance, char** out_json) {
    if (auto s = require(csv_path && out_json, "csv_path/out_json")) return s;
    return guarded([&] {
        timebridge::workflows::EgOptions opt;
        opt.csv_path = csv_path;
        opt.pair_count = true;
        opt.significance = significance;
        *out_json = dup_string(timebridge::workflows::cmd_eg(opt));
    });
}

tb_status tb_cmd_synth(const char* kind, int64_t length, int64_t channels, double sigma,
                       double beta, double noise_sigma, uint64_t seed, const char* out_csv,
                       char** out_json) {
    if (auto s = require(kind && out_csv && out_json, "kind/out_csv/out_json")) return s;
    return guarded([&] {
        timebridge::workflows::SynthOptions opt;
        opt.kind = kind;
        opt.length = length;
        opt.channels = channels;
        opt.sigma = sigma;
        opt.beta = beta;
        opt.noise_sigma = noise_sigma;
        opt.seed = seed;
        opt.out_csv = out_csv;
        *out_json = dup_string(timebridge::workflows::cmd_synth(opt));
    });
}

tb_status tb_cmd_prop1(int64_t patch_len, int64_t t, int64_t i, int64_t j, double sigma,
                       int detrended, int64_t trials, uint64_t seed, char** out_json) {
    if (auto s = require(out_json != nullptr, "out_json")) return s;
    return guarded([&] {
        timebridge::workflows::Prop1Options opt;
        opt.patch_len = patch_len;
        opt.t = t;
        opt.i = i;
        opt.j = j;
        opt.sigma = sigma;
        opt.detrended = detrended != 0;
        opt.trials = trials;
        opt.seed = seed;
        *out_json = dup_string(timebridge::workflows::cmd_prop1(opt));
    });
}

tb_status tb_cmd_backtest(const char* predicted_csv, const char* realized_csv,
                          const char* benchmark_csv, int64_t top_k, const char* equity_out_csv,
                          char** out_json) {
    if (auto s = require(predicted_csv && realized_csv && out_json,
                         "predicted_csv/realized_csv/out_json"))
        return s;
    return guarded([&] {
        timebridge::workflows::BacktestOptions opt;
        opt.predicted_csv = predicted_csv;
        opt.realized_csv = realized_csv;
        if (benchmark_csv) opt.benchmark_csv = benchmark_csv;
        opt.top_k = top_k;
        if (equity_out_csv) opt.equity_out_csv = equity_out_csv;
        *out_json = dup_string(timebridge::workflows::cmd_backtest(opt));
    });
}

}  // extern "C"
