#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace timebridge {

enum class AdfRegression { none, constant, constant_and_trend };

std::string adf_regression_name(AdfRegression r);
AdfRegression adf_regression_from_name(const std::string& name);

struct OlsResult {
    std::vector<double> coefficients;  // k
    std::vector<double> std_errors;    // k
    std::vector<double> residuals;     // n
    double rss = 0.0;
    std::int64_t n = 0;
    std::int64_t k = 0;
};

// Least squares on a row-major design matrix X [n x k]. Solved by
// column-pivoted Householder QR; standard errors from sigma^2 (X'X)^-1 with
// sigma^2 = RSS / (n - k). Rank-deficient designs raise singular_error.
// Exact fits are returned as-is (zero standard errors); consumers dividing
// by a standard error guard that case.
OlsResult ols(const std::vector<double>& X, std::int64_t n, std::int64_t k,
              const std::vector<double>& y);

struct AdfResult {
    double statistic = 0.0;       // t-value of the lagged-level coefficient
    double gamma_estimate = 0.0;
    int lag_used = 0;
    AdfRegression regression = AdfRegression::constant;
    std::int64_t n_obs = 0;       // observations in the final regression
};

inline constexpr int kAutoLags = -1;

// Unit-root regression: the differenced series on deterministic terms, the
// lagged level, and `lags` lagged differences. With kAutoLags the lag count
// minimizing AIC over 0..floor(12*(n/100)^(1/4)) is chosen on a common
// sample, then the final regression is re-fit on the full usable sample.
AdfResult adf_test(const std::vector<double>& series, AdfRegression regression,
                   int lags = kAutoLags);

// Critical value of the unit-root t-distribution (asymptotic response-surface
// points; see docs/statistics.md). significance must be 0.01, 0.05 or 0.10.
double adf_critical_value(AdfRegression regression, double significance);

// Residual-based two-variable cointegration critical value (constant in the
// first-stage regression), same significance grid.
double eg_critical_value(double significance);

struct EgResult {
    double beta = 0.0;       // first-stage slope of x on y
    double intercept = 0.0;
    AdfResult residual_adf;
    bool cointegrated = false;
    double significance_level = 0.05;
};

// Two-step residual cointegration test: OLS of x on y with intercept, then a
// unit-root test (no deterministic terms, automatic lags) on the residuals.
EgResult eg_test(const std::vector<double>& x, const std::vector<double>& y,
                 double significance = 0.05);

// Count of cointegrated verdicts over all ordered channel pairs.
int eg_pair_count(const TimeSeriesFrame& frame, double significance = 0.05);

}  // namespace timebridge
