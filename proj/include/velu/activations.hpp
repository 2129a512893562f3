#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "velu/batchstats.hpp"
#include "velu/matrix.hpp"
#include "velu/params.hpp"

namespace velu {

// Half-width of the exclusion band around +-1 for the arcsin argument. The
// argument is clamped to [-1 + kArcsinClampDelta, 1 - kArcsinClampDelta] so
// the activation stays finite for any finite input.
inline constexpr double kArcsinClampDelta = 1e-6;

// Numerically stable logistic sigmoid; never forms exp of a positive argument.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Composite inner transformation feeding the sigmoid gate:
// alpha * (arctan(beta1*x) + arcsin(clamp(beta2*x))). Odd in x while the
// clamp is inactive; bounded by alpha*pi in magnitude.
inline double arctan_arcsin(double x, const VeluParams& p) {
  double s = p.beta2 * x;
  const double lim = 1.0 - kArcsinClampDelta;
  if (s > lim) s = lim;
  if (s < -lim) s = -lim;
  return p.alpha * (std::atan(p.beta1 * x) + std::asin(s));
}

// Derivative of arctan_arcsin. Where the clamp is active the arcsin branch is
// locally constant, so its slope contribution is zero.
inline double arctan_arcsin_deriv(double x, const VeluParams& p) {
  const double t = p.beta1 * x;
  double d = p.beta1 / (1.0 + t * t);
  const double s = p.beta2 * x;
  const double lim = 1.0 - kArcsinClampDelta;
  if (s > -lim && s < lim) {
    d += p.beta2 / std::sqrt(1.0 - s * s);
  }
  return p.alpha * d;
}

// True when evaluating the activation at x clamps the arcsin argument.
inline bool arcsin_clamp_active(double x, const VeluParams& p) {
  return std::abs(p.beta2 * x) > 1.0 - kArcsinClampDelta;
}

// Intermediates of a batch forward pass, exposed for tests and reports.
struct VeluForwardAux {
  double w2_squared = 0.0;
  double adapt_factor = 1.0;
  BatchStats stats;
  std::size_t clamp_hit_count = 0;
};

// Batch evaluation of VeLU: computes batch statistics over x, the clipped
// adaptive factor, and y[i] = lambda * x[i] * sigmoid(arctan_arcsin(x[i])) *
// adapt_factor. In OutputSubtraction mode the scalar lambda_ot * W2 (the
// unsquared distance) is subtracted from every element.
// Throws EmptyBatchError / NonFiniteInputError / InvalidParamsError.
std::pair<std::vector<double>, VeluForwardAux> velu_forward_batch(std::span<const double> x,
                                                                  const VeluParams& p);

// Derivative of the scalar map t -> lambda * t * sigmoid(arctan_arcsin(t)) * a
// with the adaptive factor a computed from the supplied (frozen) statistics.
double velu_derivative_frozen(double x, const VeluParams& p, const BatchStats& stats);

// Exact Jacobian of velu_forward_batch as a function of the whole batch,
// differentiating through the batch statistics and the W2 term. n x n; the
// batch size is capped at kJacobianBatchCap.
// Throws BatchTooLargeError / EmptyBatchError / NonFiniteInputError.
Matrix velu_jacobian_batch(std::span<const double> x, const VeluParams& p);

inline constexpr std::size_t kJacobianBatchCap = 4096;

// Forward value / derivative of any activation kind at a point. For VeLU this
// is the frozen-statistics view with the batch reduced to the single point;
// training and curve evaluation use the batch entry points instead.
double baseline_forward(const ActivationKind& kind, double x);
double baseline_derivative(const ActivationKind& kind, double x);

struct CurveSample {
  double x = 0.0;
  double f = 0.0;
  double df = 0.0;
};

// n uniformly spaced samples of (x, f(x), f'(x)) on [lo, hi], endpoints
// included. For VeLU the whole sample grid is the batch behind the
// statistics, f comes from velu_forward_batch on that grid and df is the
// frozen-statistics derivative at the grid statistics.
// Throws InvalidRangeError unless lo < hi and n >= 2.
std::vector<CurveSample> eval_curve(const ActivationKind& kind, double lo, double hi, std::size_t n);

}  // namespace velu
