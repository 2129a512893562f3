#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "velu/activations.hpp"
#include "velu/matrix.hpp"
#include "velu/params.hpp"

namespace velu {

// Fully connected layer. The logits layer carries no activation.
struct DenseLayer {
  Matrix weights;              // out x in
  std::vector<double> biases;  // out
  std::optional<ActivationKind> activation;

  std::size_t fan_in() const { return weights.cols(); }
  std::size_t fan_out() const { return weights.rows(); }
};

// Dense network ending in a softmax-crossentropy head. `revision` increments
// on every parameter mutation; forward caches record it so backward can
// reject stale caches.
struct Mlp {
  std::vector<DenseLayer> layers;
  std::uint64_t revision = 0;

  std::size_t input_dim() const { return layers.front().fan_in(); }
  std::size_t output_dim() const { return layers.back().fan_out(); }
};

// widths = {input, hidden..., output}; one activation per hidden layer.
// Weights are He-style uniform over +-sqrt(6/fan_in) from the seeded
// generator, biases zero.
Mlp make_mlp(const std::vector<std::size_t>& widths,
             const std::vector<ActivationKind>& hidden_activations, std::uint64_t seed);

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> preacts;                     // z per layer
  std::vector<Matrix> outputs;                     // post-activation per layer
  std::vector<std::optional<VeluForwardAux>> aux;  // VeLU layers only
  std::uint64_t model_revision = 0;
};

// Returns logits (n x k) and the cache needed by backward.
// Throws ShapeMismatchError / NonFiniteActivationError (reports layer index).
std::pair<Matrix, ForwardCache> forward(const Mlp& mlp, const Matrix& batch);

// Inference-only forward, no cache retained.
Matrix predict(const Mlp& mlp, const Matrix& batch);

Matrix softmax_rows(const Matrix& logits);

// Mean cross-entropy over the batch; when dlogits is non-null it receives
// d(loss)/d(logits).
double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* dlogits);

// Mean cross-entropy plus, for every VeLU layer in LossPenalty mode,
// lambda_ot * W2^2 of that layer's preactivations.
double compute_loss(const Mlp& mlp, const ForwardCache& cache, std::span<const int> labels);

struct LayerGrads {
  Matrix weights;
  std::vector<double> biases;
  double lambda = 0.0;  // d(loss)/d(lambda_scale); VeLU layers only
};

struct Gradients {
  std::vector<LayerGrads> layers;
};

// How VeLU layers backpropagate through their batch statistics.
//   Exact: full through-stats coupling (diagonal + rank-one adaptive-factor
//          term + W2 term); O(n) per layer via the Jacobian's structure.
//   Fast:  frozen-statistics diagonal only.
// The LossPenalty gradient always flows through the statistics; a frozen
// penalty would be constant and the mode inert.
enum class GradMode { Exact, Fast };

// Gradients of compute_loss with respect to every parameter, including the
// per-layer trainable lambda of VeLU layers. Throws StaleCacheError when the
// model changed since the cache was built.
Gradients backward(const Mlp& mlp, const ForwardCache& cache, std::span<const int> labels,
                   GradMode mode);

double global_grad_norm(const Gradients& grads);

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
double clip_global_norm(Gradients& grads, double max_norm);

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.0;
};
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};
struct RmsPropConfig {
  double lr = 1e-3;
  double rho = 0.9;
  double eps = 1e-8;
};
struct NadamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

using OptimizerConfig = std::variant<SgdConfig, AdamConfig, RmsPropConfig, NadamConfig>;

std::string optimizer_name(const OptimizerConfig& cfg);

// Slot buffers mirror the parameter shapes. Adam and Nadam apply
// bias-corrected moments; step() performs one update and bumps the model
// revision. Throws ShapeMismatchError when gradients do not match the model.
class OptimizerState {
 public:
  OptimizerState(OptimizerConfig cfg, const Mlp& model);

  void step(Mlp& model, const Gradients& grads);
  std::size_t step_count() const { return step_count_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  struct Slot {
    Matrix w_a, w_b;                // first/second moment (or momentum) for weights
    std::vector<double> b_a, b_b;   // same for biases
    double l_a = 0.0, l_b = 0.0;    // same for the trainable lambda
  };

  OptimizerConfig cfg_;
  std::vector<Slot> slots_;
  std::size_t step_count_ = 0;
};

// Versioned JSON checkpoint: layer shapes, row-major parameter arrays, and
// full activation parameters.
void save_checkpoint(const Mlp& mlp, const std::string& path);
Mlp load_checkpoint(const std::string& path);

// FNV-1a 64 over all parameter bytes, hex encoded. Stable across runs given
// identical parameters.
std::string parameter_digest(const Mlp& mlp);

}  // namespace velu
