#include "workflows.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "error.hpp"
#include "gradcheck.hpp"
#include "loss.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "synthetic.hpp"
#include "train.hpp"

namespace timebridge::workflows {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_key(const RunConfig& config, const std::string& key) {
    if (config.get(key).empty()) {
        throw config_error("missing required config key \"" + key + "\"");
    }
}

std::int64_t channel_index(const TimeSeriesFrame& frame, const std::string& column,
                           const char* who) {
    if (column.empty()) {
        if (frame.cols() == 1) return 0;
        throw config_error(std::string(who) + ": CSV has " + std::to_string(frame.cols()) +
                           " channels, a column name is required");
    }
    for (std::int64_t c = 0; c < frame.cols(); ++c)
        if (frame.channel_names[static_cast<std::size_t>(c)] == column) return c;
    throw config_error(std::string(who) + ": no column named \"" + column + "\"");
}

json report_json(const ForecastReport& r) {
    return json{{"mse", r.mse},
                {"mae", r.mae},
                {"mape", r.mape},
                {"rmse", r.rmse},
                {"n_samples", r.n_samples}};
}

json adf_json(const AdfResult& r) {
    json j;
    j["statistic"] = r.statistic;
    j["gamma"] = r.gamma_estimate;
    j["lag_used"] = r.lag_used;
    j["regression"] = adf_regression_name(r.regression);
    j["n_obs"] = r.n_obs;
    j["critical_values"] = json{{"1%", adf_critical_value(r.regression, 0.01)},
                                {"5%", adf_critical_value(r.regression, 0.05)},
                                {"10%", adf_critical_value(r.regression, 0.10)}};
    j["reject_unit_root_5pct"] = r.statistic < adf_critical_value(r.regression, 0.05);
    return j;
}

void set_optional(json& j, const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
    else j[key] = nullptr;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open file for writing: " + path);
    out << text;
    if (!out) throw io_error("write failed: " + path);
}

struct PreparedData {
    SplitFrames splits;       // standardized
    ChannelStats stats;
    std::int64_t channels = 0;
};

PreparedData prepare_dataset(const RunConfig& config) {
    require_key(config, "csv_path");
    TimeSeriesFrame frame = load_csv(config.get("csv_path"));
    const std::int64_t configured = config.get_int("channels");
    if (configured > 0 && configured != frame.cols()) {
        throw dimension_error("config expects " + std::to_string(configured) +
                              " channels, dataset has " + std::to_string(frame.cols()));
    }
    PreparedData out;
    out.channels = frame.cols();
    SplitFrames raw = chronological_split(frame, config.split_spec());
    out.stats = compute_stats(raw.train);
    out.splits.train = standardize(raw.train, out.stats);
    out.splits.val = standardize(raw.val, out.stats);
    out.splits.test = standardize(raw.test, out.stats);
    return out;
}

json stats_json(const PreparedData& data) {
    return json{{"channels", data.splits.train.channel_names},
                {"mean", data.stats.mean},
                {"std", data.stats.std},
                {"split_rows", json{{"train", data.splits.train.rows()},
                                    {"val", data.splits.val.rows()},
                                    {"test", data.splits.test.rows()}}}};
}

}  // namespace

std::string cmd_train(const RunConfig& config) {
    PreparedData data = prepare_dataset(config);

    ModelConfig mc = config.model_config();
    mc.channels = data.channels;
    mc.validate();
    TrainConfig tc = config.train_config();

    const std::int64_t stride = config.get_int("window_stride");
    std::vector<Sample> train_set = windows(data.splits.train, mc.input_len, mc.output_len, stride);
    std::vector<Sample> val_set = windows(data.splits.val, mc.input_len, mc.output_len, stride);

    ModelParams params = ModelParams::init(mc, tc.seed);
    TrainResult result = train_model(mc, std::move(params), train_set, val_set, tc);

    const fs::path out_dir(config.get("out_dir"));
    fs::create_directories(out_dir);

    const std::string ckpt_path = (out_dir / "model.ckpt").string();
    save_checkpoint(ckpt_path, mc, result.best_params);

    std::string log_text = "epoch,train_loss,val_loss\n";
    char buf[80];
    for (const auto& e : result.log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_loss);
        log_text += buf;
    }
    const std::string log_path = (out_dir / "training_log.csv").string();
    write_text_file(log_path, log_text);

    RunConfig snapshot = config;
    snapshot.set("channels", std::to_string(data.channels));
    const std::string snap_path = (out_dir / "config_snapshot.cfg").string();
    write_text_file(snap_path, snapshot.to_text());

    const std::string stats_path = (out_dir / "standardization.json").string();
    write_text_file(stats_path, stats_json(data).dump(2) + "\n");

    json j;
    j["command"] = "train";
    j["epochs"] = result.log.size();
    j["steps"] = result.steps;
    j["initial_train_loss"] = result.initial_train_loss;
    j["final_train_loss"] = result.log.empty() ? result.initial_train_loss
                                               : result.log.back().train_loss;
    j["best_epoch"] = result.best_epoch;
    j["best_val_loss"] = result.best_val_loss;
    j["train_windows"] = train_set.size();
    j["val_windows"] = val_set.size();
    j["checkpoint"] = ckpt_path;
    j["training_log"] = log_path;
    j["config_snapshot"] = snap_path;
    j["standardization"] = stats_path;
    return j.dump(2);
}

std::string cmd_eval(const RunConfig& config, const std::string& checkpoint_path,
                     const std::string& split) {
    Checkpoint ck = load_checkpoint(checkpoint_path);
    PreparedData data = prepare_dataset(config);
    if (data.channels != ck.config.channels) {
        throw dimension_error("checkpoint was trained on " + std::to_string(ck.config.channels) +
                              " channels, dataset has " + std::to_string(data.channels));
    }

    const TimeSeriesFrame* frame = nullptr;
    if (split == "train") frame = &data.splits.train;
    else if (split == "val") frame = &data.splits.val;
    else if (split == "test") frame = &data.splits.test;
    else throw config_error("eval split must be train|val|test, got \"" + split + "\"");

    // every window is evaluated (no batch drop at the tail)
    std::vector<Sample> samples = windows(*frame, ck.config.input_len, ck.config.output_len, 1);

    const std::int64_t C = ck.config.channels, O = ck.config.output_len;
    const auto W = static_cast<std::int64_t>(samples.size());
    Tensor pred_all({W * C, O}), target_all({W * C, O});
    Tensor pred_raw({W * C, O}), target_raw({W * C, O});
    for (std::int64_t w = 0; w < W; ++w) {
        const Sample& s = samples[static_cast<std::size_t>(w)];
        Tensor pred = forward_values(s.input, ck.config, ck.params);
        Tensor pred_r = unstandardize_values(pred, data.stats);
        Tensor target_r = unstandardize_values(s.target, data.stats);
        for (std::int64_t c = 0; c < C; ++c) {
            for (std::int64_t o = 0; o < O; ++o) {
                pred_all.at(w * C + c, o) = pred.at(c, o);
                target_all.at(w * C + c, o) = s.target.at(c, o);
                pred_raw.at(w * C + c, o) = pred_r.at(c, o);
                target_raw.at(w * C + c, o) = target_r.at(c, o);
            }
        }
    }

    json j;
    j["command"] = "eval";
    j["split"] = split;
    j["checkpoint"] = checkpoint_path;
    j["standardized"] = report_json(forecast_metrics(pred_all, target_all, W));
    j["raw"] = report_json(forecast_metrics(pred_raw, target_raw, W));
    return j.dump(2);
}

GradcheckOutcome cmd_gradcheck(const RunConfig& config) {
    if (config.get_int("channels") < 1) {
        throw config_error("gradcheck requires the \"channels\" config key (no dataset to infer "
                           "it from)");
    }
    ModelConfig mc = config.model_config();
    mc.validate();
    const std::uint64_t seed = static_cast<std::uint64_t>(config.get_int("seed"));
    const double alpha = config.get_double("alpha");
    const double eps = config.get_double("gradcheck_eps");
    const double threshold = config.get_double("gradcheck_threshold");

    // synthetic input window, z-scored per channel like the training pipeline
    TimeSeriesFrame fixture = gen_trend_sinusoid(mc.input_len, mc.channels, derive_seed(seed, 1));
    Sample sample;
    sample.input = Tensor({mc.channels, mc.input_len});
    for (std::int64_t c = 0; c < mc.channels; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::int64_t t = 0; t < mc.input_len; ++t) mean += fixture.at(t, c);
        mean /= static_cast<double>(mc.input_len);
        for (std::int64_t t = 0; t < mc.input_len; ++t) {
            const double d = fixture.at(t, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(mc.input_len);
        const double inv = var > 0 ? 1.0 / std::sqrt(var) : 1.0;
        for (std::int64_t t = 0; t < mc.input_len; ++t)
            sample.input.at(c, t) = (fixture.at(t, c) - mean) * inv;
    }

    ModelParams params = ModelParams::init(mc, seed);

    // target = model output + small offsets. Central differences are only
    // trustworthy away from the loss kinks, and the 1e-8 error-denominator
    // floor makes near-zero gradients sensitive to cancellation noise
    // |loss| * 2^-52 / eps, so the loss itself must stay small. Offsets of
    // ~1e-2 keep every |.| term clear of its kink, every frequency bin of
    // the error clear of the smoothed-modulus origin (curvature ~1/|z|),
    // and the loss near 1e-2.
    Tensor base = forward_values(sample.input, mc, params);
    sample.target = Tensor({mc.channels, mc.output_len});
    const double bin_clearance = 200.0 * eps;
    for (std::uint64_t attempt = 0;; ++attempt) {
        if (attempt == 200) {
            throw degenerate_error("gradcheck: could not find a target with spectral clearance");
        }
        Rng offset_rng(derive_seed(seed, 2 + attempt));
        for (std::int64_t i = 0; i < base.numel(); ++i) {
            const double magnitude = offset_rng.uniform_range(0.005, 0.015);
            sample.target.at(i) = base.at(i) + (offset_rng.uniform() < 0.5 ? -magnitude : magnitude);
        }
        double min_modulus = 1e300;
        for (std::int64_t c = 0; c < mc.channels; ++c) {
            Tensor diff({mc.output_len});
            for (std::int64_t o = 0; o < mc.output_len; ++o)
                diff.at(o) = base.at(c, o) - sample.target.at(c, o);
            ComplexPair spectrum = dft_real(diff);
            for (std::int64_t k = 0; k < mc.output_len; ++k)
                min_modulus = std::min(min_modulus,
                                       std::hypot(spectrum.real.at(k), spectrum.imag.at(k)));
        }
        if (min_modulus >= bin_clearance) break;
    }

    std::vector<Tensor> analytic = sample_gradients(mc, params, sample, alpha, nullptr);

    std::vector<std::pair<std::string, Tensor*>> refs;
    refs.reserve(params.size());
    for (auto& p : params.params) refs.emplace_back(p.name, &p.value);
    auto objective = [&]() {
        Tape tape;
        BoundParams bound = bind_params(tape, params);
        Var pred = model_forward(tape, sample.input, mc, bound);
        Var target = tape.constant(sample.target);
        return tape.value(hybrid_loss(tape, pred, target, alpha)).at(0);
    };
    FiniteDiffReport report = finite_diff_check(objective, refs, analytic, eps);

    GradcheckOutcome out;
    out.max_rel_err = report.max_rel_err;
    out.pass = report.max_rel_err < threshold;
    json j;
    j["command"] = "gradcheck";
    j["max_rel_err"] = report.max_rel_err;
    j["worst_param"] = report.worst_param;
    j["worst_index"] = report.worst_index;
    j["analytic"] = report.analytic;
    j["numeric"] = report.numeric;
    j["eps"] = eps;
    j["threshold"] = threshold;
    j["n_parameters"] = params.size();
    j["n_coefficients"] = report.coords_checked;
    j["pass"] = out.pass;
    out.json = j.dump(2);
    return out;
}

std::string cmd_adf_csv(const AdfCsvOptions& opt) {
    if (opt.csv_path.empty()) throw config_error("adf: missing required option \"csv\"");
    TimeSeriesFrame frame = load_csv(opt.csv_path);
    const std::int64_t c = channel_index(frame, opt.column, "adf");
    AdfResult r = adf_test(frame.channel(c), adf_regression_from_name(opt.regression), opt.lags);
    json j = adf_json(r);
    j["command"] = "adf";
    j["source"] = opt.csv_path;
    j["column"] = frame.channel_names[static_cast<std::size_t>(c)];
    return j.dump(2);
}

std::string cmd_adf_synthetic(const AdfSyntheticOptions& opt) {
    if (opt.kind != "random_walk" && opt.kind != "white_noise") {
        throw config_error("adf: kind must be random_walk|white_noise, got \"" + opt.kind + "\"");
    }
    if (opt.reps < 1) throw config_error("adf: reps must be >= 1");
    const AdfRegression reg = adf_regression_from_name(opt.regression);
    std::vector<double> statistics;
    statistics.reserve(static_cast<std::size_t>(opt.reps));
    AdfResult last;
    for (int rep = 0; rep < opt.reps; ++rep) {
        const std::uint64_t rep_seed = derive_seed(opt.seed, static_cast<std::uint64_t>(rep));
        std::vector<double> series = opt.kind == "random_walk"
                                         ? gen_random_walk(opt.length, opt.sigma, rep_seed)
                                         : gen_white_noise(opt.length, opt.sigma, rep_seed);
        last = adf_test(series, reg, opt.lags);
        statistics.push_back(last.statistic);
    }
    double mean = 0.0;
    for (double s : statistics) mean += s;
    mean /= static_cast<double>(statistics.size());
    double var = 0.0;
    for (double s : statistics) var += (s - mean) * (s - mean);
    var = statistics.size() > 1 ? var / static_cast<double>(statistics.size() - 1) : 0.0;

    json j;
    j["command"] = "adf";
    j["source"] = opt.kind;
    j["length"] = opt.length;
    j["reps"] = opt.reps;
    j["sigma"] = opt.sigma;
    j["seed"] = opt.seed;
    j["regression"] = opt.regression;
    j["lag_used"] = last.lag_used;
    j["mean_statistic"] = mean;
    j["std_statistic"] = std::sqrt(var);
    j["statistics"] = statistics;
    j["critical_values"] = json{{"1%", adf_critical_value(reg, 0.01)},
                                {"5%", adf_critical_value(reg, 0.05)},
                                {"10%", adf_critical_value(reg, 0.10)}};
    return j.dump(2);
}

std::string cmd_eg(const EgOptions& opt) {
    if (opt.csv_path.empty()) throw config_error("eg: missing required option \"csv\"");
    TimeSeriesFrame frame = load_csv(opt.csv_path);
    json j;
    j["command"] = "eg";
    j["source"] = opt.csv_path;
    j["significance"] = opt.significance;
    if (opt.pair_count) {
        const int count = eg_pair_count(frame, opt.significance);
        j["mode"] = "pair_count";
        j["pair_count"] = count;
        j["n_pairs"] = frame.cols() * (frame.cols() - 1);
        return j.dump(2);
    }
    const std::int64_t cx = channel_index(frame, opt.column_x, "eg");
    const std::int64_t cy = channel_index(frame, opt.column_y, "eg");
    EgResult r = eg_test(frame.channel(cx), frame.channel(cy), opt.significance);
    j["mode"] = "pair";
    j["column_x"] = frame.channel_names[static_cast<std::size_t>(cx)];
    j["column_y"] = frame.channel_names[static_cast<std::size_t>(cy)];
    j["beta"] = r.beta;
    j["intercept"] = r.intercept;
    j["residual_statistic"] = r.residual_adf.statistic;
    j["residual_lag"] = r.residual_adf.lag_used;
    j["critical_value"] = eg_critical_value(opt.significance);
    j["cointegrated"] = r.cointegrated;
    return j.dump(2);
}

std::string cmd_synth(const SynthOptions& opt) {
    if (opt.out_csv.empty()) throw config_error("synth: missing required option \"out\"");
    TimeSeriesFrame frame;
    if (opt.kind == "random_walk" || opt.kind == "white_noise") {
        Tensor vals({opt.length, opt.channels});
        for (std::int64_t c = 0; c < opt.channels; ++c) {
            frame.channel_names.push_back("ch" + std::to_string(c));
            const std::uint64_t ch_seed = derive_seed(opt.seed, static_cast<std::uint64_t>(c));
            std::vector<double> series = opt.kind == "random_walk"
                                             ? gen_random_walk(opt.length, opt.sigma, ch_seed)
                                             : gen_white_noise(opt.length, opt.sigma, ch_seed);
            for (std::int64_t t = 0; t < opt.length; ++t)
                vals.at(t, c) = series[static_cast<std::size_t>(t)];
        }
        frame.values = std::move(vals);
    } else if (opt.kind == "cointegrated_pair") {
        CointegratedPair pair =
            gen_cointegrated_pair(opt.length, opt.beta, opt.noise_sigma, opt.seed);
        frame.channel_names = {"x", "y"};
        Tensor vals({opt.length, 2});
        for (std::int64_t t = 0; t < opt.length; ++t) {
            vals.at(t, 0) = pair.x[static_cast<std::size_t>(t)];
            vals.at(t, 1) = pair.y[static_cast<std::size_t>(t)];
        }
        frame.values = std::move(vals);
    } else if (opt.kind == "trend_sinusoid") {
        frame = gen_trend_sinusoid(opt.length, opt.channels, opt.seed);
    } else if (opt.kind == "cointegrated_channels") {
        frame = gen_cointegrated_channels(opt.length, opt.channels, opt.seed, opt.sigma,
                                          opt.noise_sigma);
    } else {
        throw config_error("synth: unknown kind \"" + opt.kind + "\"");
    }
    save_csv(frame, opt.out_csv);
    json j;
    j["command"] = "synth";
    j["kind"] = opt.kind;
    j["path"] = opt.out_csv;
    j["rows"] = frame.rows();
    j["channels"] = frame.cols();
    j["seed"] = opt.seed;
    return j.dump(2);
}

std::string cmd_prop1(const Prop1Options& opt) {
    const double mc = monte_carlo_patch_score(opt.patch_len, opt.t, opt.i, opt.j, opt.sigma,
                                              opt.detrended, opt.trials, opt.seed);
    double closed, rel_err;
    const double patch_scale =
        opt.sigma * opt.sigma * static_cast<double>(opt.patch_len);  // S*sigma^2
    if (opt.detrended) {
        closed = detrended_score_expectation(opt.patch_len, opt.i, opt.j, opt.sigma);
        rel_err = std::fabs(mc - closed) / patch_scale;
    } else {
        closed = spurious_score_expectation(opt.patch_len, opt.t, opt.i, opt.j, opt.sigma);
        rel_err = std::fabs(mc - closed) / std::fabs(closed);
    }
    json j;
    j["command"] = "prop1";
    j["S"] = opt.patch_len;
    j["t"] = opt.t;
    j["i"] = opt.i;
    j["j"] = opt.j;
    j["sigma"] = opt.sigma;
    j["trials"] = opt.trials;
    j["seed"] = opt.seed;
    j["detrended"] = opt.detrended;
    j["closed_form"] = closed;
    j["monte_carlo"] = mc;
    j["rel_err"] = rel_err;
    return j.dump(2);
}

std::string cmd_backtest(const BacktestOptions& opt) {
    if (opt.predicted_csv.empty() || opt.realized_csv.empty()) {
        throw config_error("backtest: options \"predicted\" and \"realized\" are required");
    }
    TimeSeriesFrame predicted = load_csv(opt.predicted_csv);
    TimeSeriesFrame realized = load_csv(opt.realized_csv);
    std::vector<double> benchmark;
    if (!opt.benchmark_csv.empty()) benchmark = load_csv(opt.benchmark_csv).channel(0);

    BacktestReport report = buy_hold_sell_backtest(predicted.values, realized.values, opt.top_k,
                                                   benchmark, opt.periods_per_year);

    if (!opt.equity_out_csv.empty()) {
        std::string text = "day,equity,daily_return\n";
        char buf[80];
        for (std::size_t d = 0; d < report.equity_curve.size(); ++d) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", d + 1, report.equity_curve[d],
                          report.daily_returns[d]);
            text += buf;
        }
        write_text_file(opt.equity_out_csv, text);
    }

    json j;
    j["command"] = "backtest";
    j["days"] = predicted.rows();
    j["stocks"] = predicted.cols();
    j["top_k"] = opt.top_k;
    j["periods_per_year"] = opt.periods_per_year;
    j["arr"] = report.metrics.arr;
    j["avol"] = report.metrics.avol;
    j["mdd"] = report.metrics.mdd;
    set_optional(j, "asr", report.metrics.asr);
    set_optional(j, "cr", report.metrics.cr);
    set_optional(j, "ir", report.metrics.ir);
    if (!opt.equity_out_csv.empty()) j["equity_curve"] = opt.equity_out_csv;
    return j.dump(2);
}

}  // namespace timebridge::workflows
