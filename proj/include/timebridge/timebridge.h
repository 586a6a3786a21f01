/*
 * timebridge C API
 *
 * Shared-library surface over the forecasting core: configuration handles,
 * training/evaluation, gradient checking, unit-root and cointegration tests,
 * synthetic data generation, patch-score simulation and portfolio
 * backtesting. Every command produces a single JSON document.
 *
 * Conventions:
 *   - Functions return tb_status; TB_OK is 0.
 *   - On failure, tb_last_error() returns a thread-local message describing
 *     what went wrong. Output pointers are left untouched on failure.
 *   - Strings returned through char** out parameters are heap-allocated and
 *     must be released with tb_string_free().
 *   - All randomness derives from explicit 64-bit seeds; identical inputs
 *     give bit-identical outputs. The environment variable TIMEBRIDGE_THREADS
 *     caps Monte-Carlo worker threads without changing results.
 */

#ifndef TIMEBRIDGE_H
#define TIMEBRIDGE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tb_status {
    TB_OK = 0,
    TB_ERR_INVALID_ARGUMENT = 1,
    TB_ERR_CONFIG = 2,    /* bad or missing configuration / options */
    TB_ERR_IO = 3,        /* file system failure */
    TB_ERR_PARSE = 4,     /* malformed file contents */
    TB_ERR_DIMENSION = 5, /* shape or length mismatch */
    TB_ERR_SINGULAR = 6,  /* rank-deficient regression design */
    TB_ERR_DEGENERATE = 7,/* statistically degenerate input */
    TB_ERR_THRESHOLD = 8, /* a numeric check ran but exceeded its threshold */
    TB_ERR_INTERNAL = 9
} tb_status;

const char* tb_status_name(tb_status status);

/* Message of the most recent failure on this thread ("" if none). */
const char* tb_last_error(void);

const char* tb_version(void);

void tb_string_free(char* s);

/*
 * Run configuration: a typed, schema-validated `key = value` store shared by
 * train/eval/gradcheck. Unknown keys and malformed values are TB_ERR_CONFIG.
 */
typedef struct tb_config tb_config;

tb_config* tb_config_new(void);
void tb_config_free(tb_config* config);
tb_status tb_config_load_file(tb_config* config, const char* path);
tb_status tb_config_set(tb_config* config, const char* key, const char* value);
tb_status tb_config_get(const tb_config* config, const char* key, char** out_value);
/* Full snapshot in schema order, parseable by tb_config_load_file. */
tb_status tb_config_text(const tb_config* config, char** out_text);

/*
 * Training: loads the CSV named by `csv_path`, splits chronologically,
 * standardizes with train statistics, trains with mini-batch Adam on the
 * hybrid time/frequency loss and writes into `out_dir`:
 *   model.ckpt, training_log.csv, config_snapshot.cfg, standardization.json
 */
tb_status tb_cmd_train(const tb_config* config, char** out_json);

/* Evaluates every window of the chosen split ("train"|"val"|"test");
 * reports metrics in standardized and raw units. */
tb_status tb_cmd_eval(const tb_config* config, const char* checkpoint_path, const char* split,
                      char** out_json);

/* Central finite-difference verification of every parameter gradient.
 * Returns TB_OK when max_rel_err < gradcheck_threshold, TB_ERR_THRESHOLD
 * otherwise (out_json is produced either way). */
tb_status tb_cmd_gradcheck(const tb_config* config, char** out_json);

/* Unit-root test of one CSV column. regression: "none" | "constant" |
 * "constant_and_trend"; lags: explicit count, or -1 for automatic selection
 * by AIC. */
tb_status tb_cmd_adf_csv(const char* csv_path, const char* column, const char* regression,
                         int lags, char** out_json);

/* Unit-root calibration on generated series. kind: "random_walk" |
 * "white_noise"; reps > 1 reports the mean statistic over derived seeds. */
tb_status tb_cmd_adf_synthetic(const char* kind, int64_t length, int reps, double sigma,
                               const char* regression, int lags, uint64_t seed, char** out_json);

/* Two-step residual cointegration test of two CSV columns. significance:
 * 0.01, 0.05 or 0.10. */
tb_status tb_cmd_eg_csv(const char* csv_path, const char* column_x, const char* column_y,
                        double significance, char** out_json);

/* Count of cointegrated verdicts over all ordered channel pairs. */
tb_status tb_cmd_eg_pair_count(const char* csv_path, double significance, char** out_json);

/* Writes a generated frame to CSV. kind: "random_walk" | "white_noise" |
 * "cointegrated_pair" | "trend_sinusoid" | "cointegrated_channels".
 * beta/noise_sigma apply to the pair and cointegrated-channels kinds. */
tb_status tb_cmd_synth(const char* kind, int64_t length, int64_t channels, double sigma,
                       double beta, double noise_sigma, uint64_t seed, const char* out_csv,
                       char** out_json);

/* Monte-Carlo mean dot product of two random-walk patches (length patch_len,
 * offsets i and j after burn-in t) against its closed-form expectation;
 * detrended != 0 first-differences each patch. */
tb_status tb_cmd_prop1(int64_t patch_len, int64_t t, int64_t i, int64_t j, double sigma,
                       int detrended, int64_t trials, uint64_t seed, char** out_json);

/* Daily top-k rotation backtest. predicted/realized CSVs are [days x stocks];
 * benchmark_csv may be NULL (zero benchmark); equity_out_csv may be NULL. */
tb_status tb_cmd_backtest(const char* predicted_csv, const char* realized_csv,
                          const char* benchmark_csv, int64_t top_k, const char* equity_out_csv,
                          char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* TIMEBRIDGE_H */
