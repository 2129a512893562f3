#include "velu/batchstats.hpp"

#include <algorithm>
#include <cmath>

#include "velu/errors.hpp"

namespace velu {

BatchStats compute_stats(std::span<const double> x, double epsilon, StdMode mode) {
  if (x.empty()) throw EmptyBatchError();
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidParamsError("epsilon must be a positive finite value");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw NonFiniteInputError("non-finite batch element at index " + std::to_string(i));
    }
  }

  const double n = static_cast<double>(x.size());

  // Sequential index order; see the concurrency contract.
  double sum = 0.0;
  for (double v : x) sum += v;
  const double mean = sum / n;

  double second = 0.0;
  if (mode == StdMode::Uncentered) {
    for (double v : x) second += v * v;
  } else {
    for (double v : x) {
      const double d = v - mean;
      second += d * d;
    }
  }
  const double std_dev = std::sqrt(second / n + epsilon);

  return BatchStats{mean, std_dev, x.size(), mode, epsilon};
}

double adaptive_factor(double std_value, const VeluParams& p) {
  const double raw = 1.0 + p.gamma * std::tanh(p.momentum * p.mu_mod * std_value);
  return std::clamp(raw, p.clip_lo, p.clip_hi);
}

double adaptive_factor(const BatchStats& stats, const VeluParams& p) {
  return adaptive_factor(stats.std, p);
}

EmaState ema_update(EmaState state, double current_std) {
  if (!(current_std > 0.0) || !std::isfinite(current_std)) {
    throw NonPositiveStdError("EMA update requires a positive finite std, got " +
                              std::to_string(current_std));
  }
  if (!state.initialized) {
    state.smoothed_std = current_std;
    state.initialized = true;
    return state;
  }
  state.smoothed_std = state.decay * state.smoothed_std + (1.0 - state.decay) * current_std;
  return state;
}

}  // namespace velu
