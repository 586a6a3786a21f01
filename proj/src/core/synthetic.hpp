#pragma once

#include <cstdint>
#include <vector>

#include "dataset.hpp"

namespace timebridge {

// Random walk X_0 = 0, X_t = X_{t-1} + u_t, u_t ~ N(0, sigma^2).
// Returns T values X_1..X_T (so Var(X_t) = t sigma^2 at position t, 1-based).
std::vector<double> gen_random_walk(std::int64_t T, double sigma, std::uint64_t seed);

std::vector<double> gen_white_noise(std::int64_t T, double sigma, std::uint64_t seed);

struct CointegratedPair {
    std::vector<double> x;  // x_t = beta * y_t + eta_t
    std::vector<double> y;  // random walk
};

// Constructed so that x - beta*y is the i.i.d. noise eta by identity.
CointegratedPair gen_cointegrated_pair(std::int64_t T, double beta, double noise_sigma,
                                       std::uint64_t seed);

// Expected raw dot product of two random-walk patches of length S taken at
// offsets i and j after a common burn-in t:
//   sigma^2 * (S*min(i,j) + (S^2 + 2*S*t + S)/2)
double spurious_score_expectation(std::int64_t S, std::int64_t t, std::int64_t i, std::int64_t j,
                                  double sigma);

// Expected dot product of the first-differenced patches. The dot pairs
// equal positions, whose increments sit at different times unless i == j, so
// the expectation is S*sigma^2 for i == j and 0 otherwise (overlap included).
double detrended_score_expectation(std::int64_t S, std::int64_t i, std::int64_t j, double sigma);

// Empirical mean over `trials` fresh random-walk paths of the patch dot
// product, raw or first-differenced. Deterministic for a fixed seed: trials
// use per-trial derived seeds and are aggregated in fixed 1024-trial chunks
// with compensated summation, so the result is independent of the worker
// count (capped by TIMEBRIDGE_THREADS).
double monte_carlo_patch_score(std::int64_t S, std::int64_t t, std::int64_t i, std::int64_t j,
                               double sigma, bool detrended, std::int64_t trials,
                               std::uint64_t seed);

// Per channel: linear trend + two sinusoids with seeded random phases and
// amplitudes + small Gaussian noise. Fixture generator for training tests.
TimeSeriesFrame gen_trend_sinusoid(std::int64_t T, std::int64_t C, std::uint64_t seed,
                                   double noise_sigma = 0.05);

// C channels in n_groups blocks; channels of one block share a random-walk
// trend with per-channel loadings, plus independent per-channel short-term
// AR(2) noise x_t = ar1*x_{t-1} + ar2*x_{t-2} + noise_sigma*eps_t (both
// coefficients 0 gives i.i.d. noise; complex roots give a stochastic cycle).
// Channels are cointegrated within a block and independent across blocks, so
// cross-channel structure carries real information about which channels to
// pool, and the noise autocorrelation carries the within-channel signal.
TimeSeriesFrame gen_cointegrated_channels(std::int64_t T, std::int64_t C, std::uint64_t seed,
                                          double trend_sigma = 1.0, double noise_sigma = 0.25,
                                          double noise_ar1 = 0.0, std::int64_t n_groups = 1,
                                          double noise_ar2 = 0.0);

int max_worker_threads();  // TIMEBRIDGE_THREADS cap, default hardware concurrency

}  // namespace timebridge
