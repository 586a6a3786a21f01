#include "stats.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "error.hpp"

namespace timebridge {

namespace {

// Asymptotic points of the MacKinnon response surfaces for the unit-root and
// residual-cointegration t-distributions (finite-sample terms omitted; see
// docs/statistics.md). Order: 1%, 5%, 10%.
constexpr double kAdfCritNone[3] = {-2.56574, -1.94100, -1.61682};
constexpr double kAdfCritConst[3] = {-3.43035, -2.86154, -2.56677};
constexpr double kAdfCritTrend[3] = {-3.95877, -3.41049, -3.12705};
constexpr double kEgCritTwoVar[3] = {-3.89644, -3.33613, -3.04445};

int significance_index(double significance) {
    if (std::fabs(significance - 0.01) < 1e-9) return 0;
    if (std::fabs(significance - 0.05) < 1e-9) return 1;
    if (std::fabs(significance - 0.10) < 1e-9) return 2;
    throw config_error("significance must be 0.01, 0.05 or 0.10, got " +
                       std::to_string(significance));
}

int deterministic_terms(AdfRegression r) {
    switch (r) {
        case AdfRegression::none: return 0;
        case AdfRegression::constant: return 1;
        case AdfRegression::constant_and_trend: return 2;
    }
    return 0;
}

struct AdfFit {
    double statistic;
    double gamma;
    double aic;
    std::int64_t n_obs;
};

// Builds and fits the unit-root regression for a fixed lag count. `start`
// selects the first usable time index; passing lag+1 uses the full sample,
// a larger value trims to a common sample for lag selection.
AdfFit fit_adf(const std::vector<double>& v, AdfRegression reg, int lag, std::int64_t start) {
    const auto T = static_cast<std::int64_t>(v.size());
    const std::int64_t n = T - start;
    const int det = deterministic_terms(reg);
    const std::int64_t k = det + 1 + lag;
    if (n <= k) {
        throw config_error("series too short for unit-root regression: " + std::to_string(n) +
                           " observations for " + std::to_string(k) + " regressors");
    }
    std::vector<double> X(static_cast<std::size_t>(n * k));
    std::vector<double> y(static_cast<std::size_t>(n));
    for (std::int64_t row = 0; row < n; ++row) {
        const std::int64_t t = start + row;
        y[static_cast<std::size_t>(row)] = v[static_cast<std::size_t>(t)] - v[static_cast<std::size_t>(t - 1)];
        std::int64_t col = 0;
        auto put = [&](double x) { X[static_cast<std::size_t>(row * k + col++)] = x; };
        if (reg != AdfRegression::none) put(1.0);
        if (reg == AdfRegression::constant_and_trend) put(static_cast<double>(t));
        put(v[static_cast<std::size_t>(t - 1)]);
        for (int j = 1; j <= lag; ++j)
            put(v[static_cast<std::size_t>(t - j)] - v[static_cast<std::size_t>(t - j - 1)]);
    }
    OlsResult fit = ols(X, n, k, y);
    double yty = 0.0;
    for (double v : y) yty += v * v;
    if (fit.rss <= 1e-20 * std::max(1.0, yty)) {
        throw degenerate_error(
            "unit-root regression: exact fit (zero residual variance), statistic undefined");
    }
    const int gamma_idx = det;
    AdfFit out;
    out.gamma = fit.coefficients[static_cast<std::size_t>(gamma_idx)];
    out.statistic = out.gamma / fit.std_errors[static_cast<std::size_t>(gamma_idx)];
    out.n_obs = n;
    out.aic = static_cast<double>(n) * std::log(fit.rss / static_cast<double>(n)) +
              2.0 * static_cast<double>(k);
    return out;
}

}  // namespace

std::string adf_regression_name(AdfRegression r) {
    switch (r) {
        case AdfRegression::none: return "none";
        case AdfRegression::constant: return "constant";
        case AdfRegression::constant_and_trend: return "constant_and_trend";
    }
    return "constant";
}

AdfRegression adf_regression_from_name(const std::string& name) {
    if (name == "none") return AdfRegression::none;
    if (name == "constant") return AdfRegression::constant;
    if (name == "constant_and_trend") return AdfRegression::constant_and_trend;
    throw config_error("unknown regression kind \"" + name +
                       "\" (expected none|constant|constant_and_trend)");
}

OlsResult ols(const std::vector<double>& X, std::int64_t n, std::int64_t k,
              const std::vector<double>& y) {
    if (n <= k || k < 1) {
        throw config_error("ols: need n > k >= 1, got n=" + std::to_string(n) +
                           " k=" + std::to_string(k));
    }
    if (static_cast<std::int64_t>(X.size()) != n * k ||
        static_cast<std::int64_t>(y.size()) != n) {
        throw dimension_error("ols: design/response sizes inconsistent with n=" +
                              std::to_string(n) + " k=" + std::to_string(k));
    }
    Eigen::MatrixXd Xm(n, k);
    Eigen::VectorXd yv(n);
    for (std::int64_t i = 0; i < n; ++i) {
        yv(i) = y[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < k; ++j) Xm(i, j) = X[static_cast<std::size_t>(i * k + j)];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xm);
    if (qr.rank() < k) {
        throw singular_error("ols: design matrix is rank deficient (rank " +
                             std::to_string(qr.rank()) + " of " + std::to_string(k) + ")");
    }
    Eigen::VectorXd beta = qr.solve(yv);
    Eigen::VectorXd resid = yv - Xm * beta;
    const double rss = resid.squaredNorm();
    // exact fits are legal here (sigma^2 = 0); consumers that divide by a
    // standard error must guard the degenerate case themselves
    const double sigma2 = rss / static_cast<double>(n - k);

    // (X'X)^-1 = P R^-1 R^-T P' from the pivoted factorization X P = Q R
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    Eigen::MatrixXd Rinv = R.inverse();
    Eigen::MatrixXd xtx_inv_pivoted = Rinv * Rinv.transpose();
    Eigen::MatrixXd xtx_inv = qr.colsPermutation() * xtx_inv_pivoted *
                              qr.colsPermutation().transpose();

    OlsResult out;
    out.n = n;
    out.k = k;
    out.rss = rss;
    out.coefficients.resize(static_cast<std::size_t>(k));
    out.std_errors.resize(static_cast<std::size_t>(k));
    out.residuals.resize(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < k; ++j) {
        out.coefficients[static_cast<std::size_t>(j)] = beta(j);
        out.std_errors[static_cast<std::size_t>(j)] = std::sqrt(sigma2 * xtx_inv(j, j));
    }
    for (std::int64_t i = 0; i < n; ++i) out.residuals[static_cast<std::size_t>(i)] = resid(i);
    return out;
}

AdfResult adf_test(const std::vector<double>& series, AdfRegression regression, int lags) {
    const auto T = static_cast<std::int64_t>(series.size());
    const int det = deterministic_terms(regression);
    if (T < 3 + det + std::max(lags, 0) + 3) {
        throw config_error("adf_test: series of length " + std::to_string(T) + " is too short");
    }
    double lo = series[0], hi = series[0];
    for (double x : series) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (lo == hi) throw degenerate_error("adf_test: constant series has no unit-root regression");

    int lag = lags;
    if (lags == kAutoLags) {
        const int max_lag = static_cast<int>(
            std::floor(12.0 * std::pow(static_cast<double>(T) / 100.0, 0.25)));
        // common sample across candidates so AIC values are comparable
        const std::int64_t common_start = static_cast<std::int64_t>(max_lag) + 1;
        double best_aic = 0.0;
        lag = 0;
        for (int cand = 0; cand <= max_lag; ++cand) {
            if (T - common_start <= det + 1 + cand) break;
            const AdfFit f = fit_adf(series, regression, cand, common_start);
            if (cand == 0 || f.aic < best_aic) {
                best_aic = f.aic;
                lag = cand;
            }
        }
    } else if (lags < 0) {
        throw config_error("adf_test: lag count must be >= 0 (or kAutoLags)");
    }

    const AdfFit f = fit_adf(series, regression, lag, static_cast<std::int64_t>(lag) + 1);
    AdfResult out;
    out.statistic = f.statistic;
    out.gamma_estimate = f.gamma;
    out.lag_used = lag;
    out.regression = regression;
    out.n_obs = f.n_obs;
    return out;
}

double adf_critical_value(AdfRegression regression, double significance) {
    const int idx = significance_index(significance);
    switch (regression) {
        case AdfRegression::none: return kAdfCritNone[idx];
        case AdfRegression::constant: return kAdfCritConst[idx];
        case AdfRegression::constant_and_trend: return kAdfCritTrend[idx];
    }
    return kAdfCritConst[idx];
}

double eg_critical_value(double significance) {
    return kEgCritTwoVar[significance_index(significance)];
}

EgResult eg_test(const std::vector<double>& x, const std::vector<double>& y,
                 double significance) {
    if (x.size() != y.size()) {
        throw dimension_error("eg_test: series lengths differ (" + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()) + ")");
    }
    const auto n = static_cast<std::int64_t>(x.size());
    if (n <= 20) throw config_error("eg_test: need more than 20 observations");
    significance_index(significance);

    // step 1: long-run relationship x = a + b*y
    std::vector<double> X(static_cast<std::size_t>(n) * 2);
    for (std::int64_t i = 0; i < n; ++i) {
        X[static_cast<std::size_t>(i * 2)] = 1.0;
        X[static_cast<std::size_t>(i * 2 + 1)] = y[static_cast<std::size_t>(i)];
    }
    OlsResult stage1 = ols(X, n, 2, x);
    double xtx = 0.0;
    for (double v : x) xtx += v * v;
    if (stage1.rss <= 1e-20 * std::max(1.0, xtx)) {
        throw degenerate_error(
            "eg_test: the long-run regression fits exactly (identical series up to scale), "
            "residuals carry no information");
    }

    // step 2: unit-root test on the residuals, no deterministic terms
    EgResult out;
    out.intercept = stage1.coefficients[0];
    out.beta = stage1.coefficients[1];
    out.significance_level = significance;
    out.residual_adf = adf_test(stage1.residuals, AdfRegression::none, kAutoLags);
    out.cointegrated = out.residual_adf.statistic < eg_critical_value(significance);
    return out;
}

int eg_pair_count(const TimeSeriesFrame& frame, double significance) {
    const std::int64_t C = frame.cols();
    if (C < 2) throw config_error("eg_pair_count: need at least 2 channels");
    int count = 0;
    for (std::int64_t i = 0; i < C; ++i) {
        std::vector<double> xi = frame.channel(i);
        for (std::int64_t j = 0; j < C; ++j) {
            if (i == j) continue;
            if (eg_test(xi, frame.channel(j), significance).cointegrated) ++count;
        }
    }
    return count;
}

}  // namespace timebridge
