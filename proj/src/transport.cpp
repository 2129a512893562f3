#include "velu/transport.hpp"

#include <cmath>

#include "velu/errors.hpp"

namespace velu {

double w2_squared(const BatchStats& stats, const GaussianTarget& target) {
  const double dm = stats.mean - target.mean;
  const double ds = stats.std - target.std;
  return dm * dm + ds * ds;
}

std::vector<double> w2_grad_batch(std::span<const double> x, const VeluParams& p) {
  if (x.empty()) throw EmptyBatchError();
  p.validate();

  const BatchStats stats = compute_stats(x, p.epsilon, p.std_mode);
  const GaussianTarget target{p.mu_target, p.sigma_target};
  const double sq = w2_squared(stats, target);

  std::vector<double> grad(x.size(), 0.0);
  if (sq < kW2GradGuard) return grad;

  const double w2 = std::sqrt(sq);
  const double n = static_cast<double>(x.size());
  const double dm = stats.mean - target.mean;
  const double ds = stats.std - target.std;
  for (std::size_t j = 0; j < x.size(); ++j) {
    // d(mean)/dx_j = 1/n; d(std)/dx_j chains through the configured estimator.
    const double dstd_dx = (p.std_mode == StdMode::Uncentered)
                               ? x[j] / (n * stats.std)
                               : (x[j] - stats.mean) / (n * stats.std);
    grad[j] = (dm / n + ds * dstd_dx) / w2;
  }
  return grad;
}

}  // namespace velu
