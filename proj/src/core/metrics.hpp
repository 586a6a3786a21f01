#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tensor.hpp"

namespace timebridge {

struct ForecastReport {
    double mse = 0.0;
    double mae = 0.0;
    double mape = 0.0;  // percent, zero targets excluded
    double rmse = 0.0;
    std::int64_t n_samples = 0;
    std::int64_t mape_excluded = 0;  // zero-target elements skipped by MAPE
};

// Element means over equally-shaped prediction/target tensors. MAPE skips
// zero targets and reports how many were skipped; if every target is zero
// that is an error.
ForecastReport forecast_metrics(const Tensor& pred, const Tensor& target,
                                std::int64_t n_samples = 1);

// Ratios are absent when their denominator is zero (never infinity).
struct FinancialMetrics {
    double arr = 0.0;
    double avol = 0.0;
    double mdd = 0.0;  // <= 0
    std::optional<double> asr;
    std::optional<double> cr;
    std::optional<double> ir;
};

struct BacktestReport {
    FinancialMetrics metrics;
    std::vector<double> equity_curve;   // compounded from 1.0, one value per day
    std::vector<double> daily_returns;  // portfolio daily returns
    std::vector<std::vector<std::int64_t>> holdings;  // selected stock indices per day
};

// Annualized metrics over a daily return series; annualization factor
// defaults to 252 trading days. The drawdown search runs over the equity
// curve with its 1.0 starting point included. Volatility uses the sample
// standard deviation.
FinancialMetrics financial_metrics(const std::vector<double>& daily_returns,
                                   const std::vector<double>& benchmark_returns,
                                   double periods_per_year = 252.0);

// Daily rotation strategy: hold the top_k stocks by predicted return, equal
// weighted; ties break toward the lower stock index. predicted/realized are
// [days x stocks] row-major.
BacktestReport buy_hold_sell_backtest(const Tensor& predicted_returns,
                                      const Tensor& realized_returns, std::int64_t top_k,
                                      const std::vector<double>& benchmark_returns,
                                      double periods_per_year = 252.0);

}  // namespace timebridge
