#include "velu/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>

#include "velu/activations.hpp"
#include "velu/errors.hpp"

namespace velu::kernels {

namespace {

std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::OpenMp
#else
    Backend::Serial
#endif
};

void check_dense_shapes(const Matrix& c, const Matrix& a, const Matrix& b,
                        std::span<const double> bias) {
  if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows() ||
      (!bias.empty() && bias.size() != b.rows())) {
    throw ShapeMismatchError("dense_forward: incompatible shapes");
  }
}

void check_matmul_shapes(const Matrix& c, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw ShapeMismatchError("matmul: incompatible shapes");
  }
}

void check_matmul_tn_shapes(const Matrix& c, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    throw ShapeMismatchError("matmul_tn: incompatible shapes");
  }
}

// Row workers shared by the serial and OpenMP variants so both orderings of
// per-element accumulation are literally the same code.

inline void dense_forward_row(Matrix& c, const Matrix& a, const Matrix& b,
                              std::span<const double> bias, std::size_t i) {
  const double* ai = a.data() + i * a.cols();
  double* ci = c.data() + i * c.cols();
  const std::size_t k = a.cols();
  for (std::size_t j = 0; j < c.cols(); ++j) {
    const double* bj = b.data() + j * k;
    double acc = bias.empty() ? 0.0 : bias[j];
    for (std::size_t t = 0; t < k; ++t) acc += ai[t] * bj[t];
    ci[j] = acc;
  }
}

inline void matmul_row(Matrix& c, const Matrix& a, const Matrix& b, std::size_t i) {
  const double* ai = a.data() + i * a.cols();
  double* ci = c.data() + i * c.cols();
  const std::size_t m = c.cols();
  for (std::size_t j = 0; j < m; ++j) ci[j] = 0.0;
  for (std::size_t t = 0; t < a.cols(); ++t) {
    const double av = ai[t];
    const double* bt = b.data() + t * m;
    for (std::size_t j = 0; j < m; ++j) ci[j] += av * bt[j];
  }
}

inline void matmul_tn_row(Matrix& c, const Matrix& a, const Matrix& b, std::size_t o) {
  // c row o accumulates a(:,o)^T * b, batch index ascending.
  double* co = c.data() + o * c.cols();
  const std::size_t m = c.cols();
  for (std::size_t j = 0; j < m; ++j) co[j] = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double av = a(i, o);
    const double* bi = b.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) co[j] += av * bi[j];
  }
}

inline double velu_gate_element(double x, const VeluParams& p, double adapt, double shift,
                                std::size_t& clamps) {
  if (arcsin_clamp_active(x, p)) ++clamps;
  return p.lambda_scale * x * sigmoid(arctan_arcsin(x, p)) * adapt - shift;
}

inline double velu_frozen_element(double x, const VeluParams& p, double adapt) {
  const double s = sigmoid(arctan_arcsin(x, p));
  return p.lambda_scale * (s + x * s * (1.0 - s) * arctan_arcsin_deriv(x, p)) * adapt;
}

}  // namespace

Backend default_backend() { return g_backend.load(); }
void set_default_backend(Backend b) { g_backend.store(b); }

namespace serial {

void dense_forward(Matrix& c, const Matrix& a, const Matrix& b, std::span<const double> bias) {
  check_dense_shapes(c, a, b, bias);
  for (std::size_t i = 0; i < a.rows(); ++i) dense_forward_row(c, a, b, bias, i);
}

void matmul(Matrix& c, const Matrix& a, const Matrix& b) {
  check_matmul_shapes(c, a, b);
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(c, a, b, i);
}

void matmul_tn(Matrix& c, const Matrix& a, const Matrix& b) {
  check_matmul_tn_shapes(c, a, b);
  for (std::size_t o = 0; o < c.rows(); ++o) matmul_tn_row(c, a, b, o);
}

std::size_t velu_gate_map(std::span<double> y, std::span<const double> x, const VeluParams& p,
                          double adapt, double shift) {
  std::size_t clamps = 0;
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = velu_gate_element(x[i], p, adapt, shift, clamps);
  return clamps;
}

void velu_frozen_deriv_map(std::span<double> d, std::span<const double> x, const VeluParams& p,
                           double adapt) {
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = velu_frozen_element(x[i], p, adapt);
}

void activation_map(std::span<double> y, std::span<const double> x, const ActivationKind& kind) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = baseline_forward(kind, x[i]);
}

void activation_deriv_map(std::span<double> d, std::span<const double> x,
                          const ActivationKind& kind) {
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = baseline_derivative(kind, x[i]);
}

}  // namespace serial

namespace omp {

// Parallel loops split independent output rows/elements across threads; each
// element's accumulation order is identical to the serial variant.

void dense_forward(Matrix& c, const Matrix& a, const Matrix& b, std::span<const double> bias) {
  check_dense_shapes(c, a, b, bias);
  const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) dense_forward_row(c, a, b, bias, static_cast<std::size_t>(i));
}

void matmul(Matrix& c, const Matrix& a, const Matrix& b) {
  check_matmul_shapes(c, a, b);
  const std::int64_t n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) matmul_row(c, a, b, static_cast<std::size_t>(i));
}

void matmul_tn(Matrix& c, const Matrix& a, const Matrix& b) {
  check_matmul_tn_shapes(c, a, b);
  const std::int64_t n = static_cast<std::int64_t>(c.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t o = 0; o < n; ++o) matmul_tn_row(c, a, b, static_cast<std::size_t>(o));
}

std::size_t velu_gate_map(std::span<double> y, std::span<const double> x, const VeluParams& p,
                          double adapt, double shift) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  std::int64_t clamps = 0;
// Integer reduction; exact regardless of thread count.
#pragma omp parallel for schedule(static) reduction(+ : clamps)
  for (std::int64_t i = 0; i < n; ++i) {
    std::size_t local = 0;
    y[i] = velu_gate_element(x[i], p, adapt, shift, local);
    clamps += static_cast<std::int64_t>(local);
  }
  return static_cast<std::size_t>(clamps);
}

void velu_frozen_deriv_map(std::span<double> d, std::span<const double> x, const VeluParams& p,
                           double adapt) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] = velu_frozen_element(x[i], p, adapt);
}

void activation_map(std::span<double> y, std::span<const double> x, const ActivationKind& kind) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] = baseline_forward(kind, x[i]);
}

void activation_deriv_map(std::span<double> d, std::span<const double> x,
                          const ActivationKind& kind) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) d[i] = baseline_derivative(kind, x[i]);
}

}  // namespace omp

void dense_forward(Matrix& c, const Matrix& a, const Matrix& b, std::span<const double> bias) {
  if (default_backend() == Backend::OpenMp) {
    omp::dense_forward(c, a, b, bias);
  } else {
    serial::dense_forward(c, a, b, bias);
  }
}

void matmul(Matrix& c, const Matrix& a, const Matrix& b) {
  if (default_backend() == Backend::OpenMp) {
    omp::matmul(c, a, b);
  } else {
    serial::matmul(c, a, b);
  }
}

void matmul_tn(Matrix& c, const Matrix& a, const Matrix& b) {
  if (default_backend() == Backend::OpenMp) {
    omp::matmul_tn(c, a, b);
  } else {
    serial::matmul_tn(c, a, b);
  }
}

std::size_t velu_gate_map(std::span<double> y, std::span<const double> x, const VeluParams& p,
                          double adapt, double shift) {
  return default_backend() == Backend::OpenMp ? omp::velu_gate_map(y, x, p, adapt, shift)
                                              : serial::velu_gate_map(y, x, p, adapt, shift);
}

void velu_frozen_deriv_map(std::span<double> d, std::span<const double> x, const VeluParams& p,
                           double adapt) {
  if (default_backend() == Backend::OpenMp) {
    omp::velu_frozen_deriv_map(d, x, p, adapt);
  } else {
    serial::velu_frozen_deriv_map(d, x, p, adapt);
  }
}

void activation_map(std::span<double> y, std::span<const double> x, const ActivationKind& kind) {
  if (default_backend() == Backend::OpenMp) {
    omp::activation_map(y, x, kind);
  } else {
    serial::activation_map(y, x, kind);
  }
}

void activation_deriv_map(std::span<double> d, std::span<const double> x,
                          const ActivationKind& kind) {
  if (default_backend() == Backend::OpenMp) {
    omp::activation_deriv_map(d, x, kind);
  } else {
    serial::activation_deriv_map(d, x, kind);
  }
}

}  // namespace velu::kernels
