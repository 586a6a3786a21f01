#pragma once

#include "tape.hpp"

namespace timebridge {

inline constexpr double kFreqLossEps = 1e-12;

// Mean absolute error over all elements; subgradient 0 at exact ties.
Var mae_time(Tape& tape, Var pred, Var target);

// Per channel (row), DFT along the horizon axis of prediction and target,
// then the mean over channels and all frequency bins of the smoothed complex
// modulus of the difference.
Var mae_freq(Tape& tape, Var pred, Var target, double eps = kFreqLossEps);

// (1 - alpha) * time loss + alpha * frequency loss, alpha in [0, 1].
Var hybrid_loss(Tape& tape, Var pred, Var target, double alpha, double eps = kFreqLossEps);

}  // namespace timebridge
