#pragma once

#include <cstddef>
#include <span>

#include "velu/params.hpp"

namespace velu {

// Per-batch moments used by the adaptive factor and the W2 penalty.
// Invariant: std >= sqrt(epsilon_used) > 0, count >= 1.
struct BatchStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
  StdMode mode = StdMode::Uncentered;
  double epsilon_used = 0.0;
};

// Exponential moving average over per-batch standard deviations. Optional
// smoothing layer over the raw statistics; nothing in the default training
// path uses it.
struct EmaState {
  double smoothed_std = 0.0;
  double decay = 0.9;  // in (0, 1]
  bool initialized = false;
};

// mean = sum(x)/n; Uncentered std = sqrt(sum(x^2)/n + eps);
// Centered std = sqrt(population variance + eps).
// Accumulations run in sequential index order so results are bit-reproducible.
// Throws EmptyBatchError / NonFiniteInputError / InvalidParamsError.
BatchStats compute_stats(std::span<const double> x, double epsilon, StdMode mode);

// clip(1 + gamma * tanh(momentum * mu_mod * std_value), clip_lo, clip_hi).
double adaptive_factor(double std_value, const VeluParams& p);
double adaptive_factor(const BatchStats& stats, const VeluParams& p);

// First update adopts current_std; afterwards
// smoothed <- decay * smoothed + (1 - decay) * current_std.
// Throws NonPositiveStdError when current_std <= 0.
EmaState ema_update(EmaState state, double current_std);

}  // namespace velu
