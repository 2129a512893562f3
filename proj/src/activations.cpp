#include "velu/activations.hpp"

#include <cmath>

#include "velu/errors.hpp"
#include "velu/kernels.hpp"
#include "velu/transport.hpp"

namespace velu {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSqrt2OverPi = 0.79788456080286535588;
constexpr double kGeluTanhCubic = 0.044715;

void check_batch(std::span<const double> x) {
  if (x.empty()) throw EmptyBatchError();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw NonFiniteInputError("non-finite batch element at index " + std::to_string(i));
    }
  }
}

double normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); }
double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

std::pair<std::vector<double>, VeluForwardAux> velu_forward_batch(std::span<const double> x,
                                                                  const VeluParams& p) {
  p.validate();
  check_batch(x);

  VeluForwardAux aux;
  aux.stats = compute_stats(x, p.epsilon, p.std_mode);
  aux.adapt_factor = adaptive_factor(aux.stats, p);
  aux.w2_squared = w2_squared(aux.stats, GaussianTarget{p.mu_target, p.sigma_target});

  const double shift =
      p.w2_mode == W2Mode::OutputSubtraction ? p.lambda_ot * std::sqrt(aux.w2_squared) : 0.0;

  std::vector<double> y(x.size());
  aux.clamp_hit_count = kernels::velu_gate_map(y, x, p, aux.adapt_factor, shift);
  return {std::move(y), aux};
}

double velu_derivative_frozen(double x, const VeluParams& p, const BatchStats& stats) {
  const double a = adaptive_factor(stats, p);
  const double s = sigmoid(arctan_arcsin(x, p));
  return p.lambda_scale * (s + x * s * (1.0 - s) * arctan_arcsin_deriv(x, p)) * a;
}

Matrix velu_jacobian_batch(std::span<const double> x, const VeluParams& p) {
  p.validate();
  check_batch(x);
  if (x.size() > kJacobianBatchCap) {
    throw BatchTooLargeError("jacobian batch size " + std::to_string(x.size()) +
                             " exceeds cap of " + std::to_string(kJacobianBatchCap));
  }

  const std::size_t n = x.size();
  const double dn = static_cast<double>(n);
  const BatchStats stats = compute_stats(x, p.epsilon, p.std_mode);

  // Adaptive factor and its through-stats derivative. A saturated clip makes
  // the factor locally constant.
  const double z = p.momentum * p.mu_mod * stats.std;
  const double th = std::tanh(z);
  const double raw = 1.0 + p.gamma * th;
  const bool clipped = raw < p.clip_lo || raw > p.clip_hi;
  const double adapt = adaptive_factor(stats, p);
  const double dadapt_dstd = clipped ? 0.0 : p.gamma * (1.0 - th * th) * p.momentum * p.mu_mod;

  const std::vector<double> w2grad =
      p.w2_mode == W2Mode::OutputSubtraction ? w2_grad_batch(x, p) : std::vector<double>();

  Matrix jac(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double gate = sigmoid(arctan_arcsin(x[i], p));
    const double through_gate = p.lambda_scale * x[i] * gate;  // d y_i / d adapt
    const double diag = velu_derivative_frozen(x[i], p, stats);
    for (std::size_t j = 0; j < n; ++j) {
      const double dstd_dx = (p.std_mode == StdMode::Uncentered)
                                 ? x[j] / (dn * stats.std)
                                 : (x[j] - stats.mean) / (dn * stats.std);
      double v = through_gate * dadapt_dstd * dstd_dx;
      if (i == j) v += diag;
      if (!w2grad.empty()) v -= p.lambda_ot * w2grad[j];
      jac(i, j) = v;
    }
  }
  return jac;
}

double baseline_forward(const ActivationKind& kind, double x) {
  switch (kind.tag()) {
    case ActivationKind::Tag::ReLU:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::Tag::ReLU6:
      return x > 6.0 ? 6.0 : (x > 0.0 ? x : 0.0);
    case ActivationKind::Tag::Swish:
      return x * sigmoid(x);
    case ActivationKind::Tag::GELU:
      if (kind.gelu_form() == GeluForm::Erf) return x * normal_cdf(x);
      return 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + kGeluTanhCubic * x * x * x)));
    case ActivationKind::Tag::VeLU: {
      const VeluParams& p = kind.velu_params();
      const BatchStats stats = compute_stats(std::span<const double>(&x, 1), p.epsilon, p.std_mode);
      return p.lambda_scale * x * sigmoid(arctan_arcsin(x, p)) * adaptive_factor(stats, p);
    }
  }
  return 0.0;
}

double baseline_derivative(const ActivationKind& kind, double x) {
  switch (kind.tag()) {
    case ActivationKind::Tag::ReLU:
      // Kink convention: derivative 0 at exactly 0.
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::Tag::ReLU6:
      return (x > 0.0 && x < 6.0) ? 1.0 : 0.0;
    case ActivationKind::Tag::Swish: {
      const double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case ActivationKind::Tag::GELU: {
      if (kind.gelu_form() == GeluForm::Erf) return normal_cdf(x) + x * normal_pdf(x);
      const double u = kSqrt2OverPi * (x + kGeluTanhCubic * x * x * x);
      const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluTanhCubic * x * x);
      const double t = std::tanh(u);
      return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
    }
    case ActivationKind::Tag::VeLU: {
      const VeluParams& p = kind.velu_params();
      const BatchStats stats = compute_stats(std::span<const double>(&x, 1), p.epsilon, p.std_mode);
      return velu_derivative_frozen(x, p, stats);
    }
  }
  return 0.0;
}

std::vector<CurveSample> eval_curve(const ActivationKind& kind, double lo, double hi,
                                    std::size_t n) {
  if (!(lo < hi) || n < 2 || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidRangeError("curve range requires lo < hi (finite) and n >= 2");
  }

  std::vector<double> grid(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid.front() = lo;
  grid.back() = hi;

  std::vector<CurveSample> samples(n);
  if (kind.is_velu()) {
    // The whole grid is the batch behind the statistics; f carries the
    // OutputSubtraction shift and df is the frozen-statistics derivative.
    const VeluParams& p = kind.velu_params();
    auto [y, aux] = velu_forward_batch(grid, p);
    std::vector<double> d(n);
    kernels::velu_frozen_deriv_map(d, grid, p, aux.adapt_factor);
    for (std::size_t i = 0; i < n; ++i) samples[i] = {grid[i], y[i], d[i]};
  } else {
    std::vector<double> y(n), d(n);
    kernels::activation_map(y, grid, kind);
    kernels::activation_deriv_map(d, grid, kind);
    for (std::size_t i = 0; i < n; ++i) samples[i] = {grid[i], y[i], d[i]};
  }
  return samples;
}

}  // namespace velu
