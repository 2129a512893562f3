#pragma once

#include <cstddef>
#include <span>

#include "velu/matrix.hpp"
#include "velu/params.hpp"

namespace velu::kernels {

// Every kernel exists twice: a plain serial reference under serial:: and an
// OpenMP variant under omp::. The parallel variants split work over
// independent output elements only; every per-element accumulation keeps the
// serial index order, so both variants produce bit-identical results for any
// thread count. Batch-moment reductions are NOT kernels: they stay sequential
// in compute_stats by contract.
enum class Backend { Serial, OpenMp };

Backend default_backend();
void set_default_backend(Backend b);

namespace serial {

// C = A * B^T + bias (bias may be empty). A: n x k, B: m x k, C: n x m.
void dense_forward(Matrix& c, const Matrix& a, const Matrix& b, std::span<const double> bias);

// C = A * B. A: n x k, B: k x m.
void matmul(Matrix& c, const Matrix& a, const Matrix& b);

// C = A^T * B. A: n x k, B: n x m, C: k x m.
void matmul_tn(Matrix& c, const Matrix& a, const Matrix& b);

// y[i] = lambda * x[i] * sigmoid(arctan_arcsin(x[i])) * adapt - shift.
// Returns the number of elements whose arcsin argument was clamped.
std::size_t velu_gate_map(std::span<double> y, std::span<const double> x, const VeluParams& p,
                          double adapt, double shift);

// d[i] = frozen-statistics derivative at x[i] given the adaptive factor.
void velu_frozen_deriv_map(std::span<double> d, std::span<const double> x, const VeluParams& p,
                           double adapt);

// Elementwise baseline activation / derivative (kind must not be VeLU).
void activation_map(std::span<double> y, std::span<const double> x, const ActivationKind& kind);
void activation_deriv_map(std::span<double> d, std::span<const double> x,
                          const ActivationKind& kind);

}  // namespace serial

namespace omp {

void dense_forward(Matrix& c, const Matrix& a, const Matrix& b, std::span<const double> bias);
void matmul(Matrix& c, const Matrix& a, const Matrix& b);
void matmul_tn(Matrix& c, const Matrix& a, const Matrix& b);
std::size_t velu_gate_map(std::span<double> y, std::span<const double> x, const VeluParams& p,
                          double adapt, double shift);
void velu_frozen_deriv_map(std::span<double> d, std::span<const double> x, const VeluParams& p,
                           double adapt);
void activation_map(std::span<double> y, std::span<const double> x, const ActivationKind& kind);
void activation_deriv_map(std::span<double> d, std::span<const double> x,
                          const ActivationKind& kind);

}  // namespace omp

// Dispatchers honoring the process-wide default backend.
void dense_forward(Matrix& c, const Matrix& a, const Matrix& b, std::span<const double> bias);
void matmul(Matrix& c, const Matrix& a, const Matrix& b);
void matmul_tn(Matrix& c, const Matrix& a, const Matrix& b);
std::size_t velu_gate_map(std::span<double> y, std::span<const double> x, const VeluParams& p,
                          double adapt, double shift);
void velu_frozen_deriv_map(std::span<double> d, std::span<const double> x, const VeluParams& p,
                           double adapt);
void activation_map(std::span<double> y, std::span<const double> x, const ActivationKind& kind);
void activation_deriv_map(std::span<double> d, std::span<const double> x,
                          const ActivationKind& kind);

}  // namespace velu::kernels
