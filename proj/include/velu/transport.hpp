#pragma once

#include <span>
#include <vector>

#include "velu/batchstats.hpp"
#include "velu/params.hpp"

namespace velu {

// Target Gaussian moments for the W2 alignment term.
struct GaussianTarget {
  double mean = 0.0;
  double std = 1.0;  // must be > 0
};

// Closed-form squared Wasserstein-2 distance between the batch moments and a
// Gaussian target: (mean - target.mean)^2 + (std - target.std)^2.
double w2_squared(const BatchStats& stats, const GaussianTarget& target);

// Gradient of sqrt(w2_squared(compute_stats(x))) with respect to each batch
// element, chained through mean and std under p.std_mode. Returns all zeros
// when the squared distance is below 1e-12 (the sqrt derivative is unbounded
// at perfect alignment).
std::vector<double> w2_grad_batch(std::span<const double> x, const VeluParams& p);

// Guard threshold shared with the Jacobian path.
inline constexpr double kW2GradGuard = 1e-12;

}  // namespace velu
