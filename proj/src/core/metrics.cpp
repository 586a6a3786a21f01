#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace timebridge {

ForecastReport forecast_metrics(const Tensor& pred, const Tensor& target,
                                std::int64_t n_samples) {
    if (!pred.same_shape(target)) {
        throw dimension_error("forecast_metrics: shape mismatch " + shape_str(pred.shape()) +
                              " vs " + shape_str(target.shape()));
    }
    const std::int64_t n = pred.numel();
    double se = 0.0, ae = 0.0, ape = 0.0;
    std::int64_t mape_n = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = target.at(i) - pred.at(i);
        se += d * d;
        ae += std::fabs(d);
        if (target.at(i) != 0.0) {
            ape += std::fabs(d / target.at(i));
            ++mape_n;
        }
    }
    if (mape_n == 0) {
        throw degenerate_error("forecast_metrics: every target element is zero, MAPE undefined");
    }
    ForecastReport r;
    r.mse = se / static_cast<double>(n);
    r.mae = ae / static_cast<double>(n);
    r.mape = ape / static_cast<double>(mape_n) * 100.0;
    r.rmse = std::sqrt(r.mse);
    r.n_samples = n_samples;
    r.mape_excluded = n - mape_n;
    return r;
}

FinancialMetrics financial_metrics(const std::vector<double>& daily_returns,
                                   const std::vector<double>& benchmark_returns,
                                   double periods_per_year) {
    const auto n = static_cast<std::int64_t>(daily_returns.size());
    if (n < 2) throw config_error("financial_metrics: need at least 2 daily returns");
    if (benchmark_returns.size() != daily_returns.size()) {
        throw dimension_error("financial_metrics: benchmark length " +
                              std::to_string(benchmark_returns.size()) +
                              " does not match returns length " + std::to_string(n));
    }

    FinancialMetrics m;

    // equity curve from 1.0; the starting point participates in the peak search
    double equity = 1.0;
    double peak = 1.0;
    double worst = 0.0;
    for (double r : daily_returns) {
        equity *= (1.0 + r);
        peak = std::max(peak, equity);
        worst = std::max(worst, (peak - equity) / peak);
    }
    m.mdd = worst == 0.0 ? 0.0 : -worst;

    const double total_return = equity - 1.0;
    const double years = static_cast<double>(n) / periods_per_year;
    m.arr = std::pow(1.0 + total_return, 1.0 / years) - 1.0;

    const double mean_r =
        std::accumulate(daily_returns.begin(), daily_returns.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double r : daily_returns) var += (r - mean_r) * (r - mean_r);
    var /= static_cast<double>(n - 1);
    m.avol = std::sqrt(periods_per_year * var);

    if (m.avol > 0.0) m.asr = m.arr / m.avol;
    if (m.mdd < 0.0) m.cr = m.arr / std::fabs(m.mdd);

    double mean_ex = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        mean_ex += daily_returns[static_cast<std::size_t>(i)] -
                   benchmark_returns[static_cast<std::size_t>(i)];
    mean_ex /= static_cast<double>(n);
    double var_ex = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = daily_returns[static_cast<std::size_t>(i)] -
                         benchmark_returns[static_cast<std::size_t>(i)] - mean_ex;
        var_ex += d * d;
    }
    var_ex /= static_cast<double>(n - 1);
    if (var_ex > 0.0) m.ir = mean_ex / std::sqrt(var_ex) * std::sqrt(periods_per_year);

    return m;
}

BacktestReport buy_hold_sell_backtest(const Tensor& predicted_returns,
                                      const Tensor& realized_returns, std::int64_t top_k,
                                      const std::vector<double>& benchmark_returns,
                                      double periods_per_year) {
    if (predicted_returns.ndim() != 2 || !predicted_returns.same_shape(realized_returns)) {
        throw dimension_error("backtest: predicted " + shape_str(predicted_returns.shape()) +
                              " and realized " + shape_str(realized_returns.shape()) +
                              " must be equal [days x stocks] matrices");
    }
    const std::int64_t days = predicted_returns.dim(0);
    const std::int64_t stocks = predicted_returns.dim(1);
    if (top_k < 1 || top_k > stocks) {
        throw config_error("backtest: top_k " + std::to_string(top_k) +
                           " out of range for " + std::to_string(stocks) + " stocks");
    }
    if (!benchmark_returns.empty() &&
        static_cast<std::int64_t>(benchmark_returns.size()) != days) {
        throw dimension_error("backtest: benchmark length " +
                              std::to_string(benchmark_returns.size()) + " vs " +
                              std::to_string(days) + " days");
    }

    BacktestReport report;
    report.daily_returns.reserve(static_cast<std::size_t>(days));
    report.equity_curve.reserve(static_cast<std::size_t>(days));
    std::vector<std::int64_t> order(static_cast<std::size_t>(stocks));
    double equity = 1.0;
    for (std::int64_t d = 0; d < days; ++d) {
        std::iota(order.begin(), order.end(), 0);
        // descending by prediction, ties toward the lower index
        std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
            return predicted_returns.at(d, a) > predicted_returns.at(d, b);
        });
        order.resize(static_cast<std::size_t>(top_k));
        std::sort(order.begin(), order.end());
        double r = 0.0;
        for (std::int64_t s : order) r += realized_returns.at(d, s);
        r /= static_cast<double>(top_k);
        report.daily_returns.push_back(r);
        report.holdings.push_back(order);
        equity *= (1.0 + r);
        report.equity_curve.push_back(equity);
        order.resize(static_cast<std::size_t>(stocks));
    }

    std::vector<double> bench = benchmark_returns;
    if (bench.empty()) bench.assign(static_cast<std::size_t>(days), 0.0);
    report.metrics = financial_metrics(report.daily_returns, bench, periods_per_year);
    return report;
}

}  // namespace timebridge
