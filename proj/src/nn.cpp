#include "velu/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "velu/errors.hpp"
#include "velu/kernels.hpp"
#include "velu/rng.hpp"
#include "velu/transport.hpp"

#include "json_util.hpp"

namespace velu {

namespace {

void check_finite_or_throw(std::span<const double> values, std::size_t layer) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NonFiniteActivationError(layer);
  }
}

// d(std)/d(element j) for the estimator behind `stats`.
inline double dstd_dx(double xj, const BatchStats& stats) {
  const double n = static_cast<double>(stats.count);
  return stats.mode == StdMode::Uncentered ? xj / (n * stats.std)
                                           : (xj - stats.mean) / (n * stats.std);
}

}  // namespace

Mlp make_mlp(const std::vector<std::size_t>& widths,
             const std::vector<ActivationKind>& hidden_activations, std::uint64_t seed) {
  if (widths.size() < 2) throw ShapeMismatchError("an MLP needs at least input and output widths");
  if (hidden_activations.size() + 2 != widths.size()) {
    throw ShapeMismatchError("expected one activation per hidden layer: got " +
                             std::to_string(hidden_activations.size()) + " for " +
                             std::to_string(widths.size() - 2) + " hidden layers");
  }
  for (std::size_t w : widths) {
    if (w == 0) throw ShapeMismatchError("layer widths must be >= 1");
  }

  Mlp mlp;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    layer.weights = Matrix(out, in);
    layer.biases.assign(out, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    for (std::size_t r = 0; r < out; ++r) {
      for (std::size_t c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
    if (l + 2 < widths.size()) layer.activation = hidden_activations[l];
    mlp.layers.push_back(std::move(layer));
  }
  mlp.revision = 1;
  return mlp;
}

std::pair<Matrix, ForwardCache> forward(const Mlp& mlp, const Matrix& batch) {
  if (batch.cols() != mlp.input_dim()) {
    throw ShapeMismatchError("batch width " + std::to_string(batch.cols()) +
                             " does not match model input " + std::to_string(mlp.input_dim()));
  }

  ForwardCache cache;
  cache.input = batch;
  cache.model_revision = mlp.revision;
  cache.preacts.reserve(mlp.layers.size());
  cache.outputs.reserve(mlp.layers.size());
  cache.aux.resize(mlp.layers.size());

  const Matrix* current = &batch;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const DenseLayer& layer = mlp.layers[l];
    Matrix z(current->rows(), layer.fan_out());
    kernels::dense_forward(z, *current, layer.weights, layer.biases);

    Matrix out;
    if (!layer.activation.has_value()) {
      out = z;
    } else if (layer.activation->is_velu()) {
      try {
        auto [y, aux] = velu_forward_batch(z.flat(), layer.activation->velu_params());
        out = Matrix(z.rows(), z.cols());
        std::copy(y.begin(), y.end(), out.data());
        cache.aux[l] = aux;
      } catch (const NonFiniteInputError&) {
        throw NonFiniteActivationError(l);
      }
    } else {
      out = Matrix(z.rows(), z.cols());
      kernels::activation_map(out.flat(), z.flat(), *layer.activation);
    }
    check_finite_or_throw(out.flat(), l);

    cache.preacts.push_back(std::move(z));
    cache.outputs.push_back(std::move(out));
    current = &cache.outputs.back();
  }

  return {cache.outputs.back(), std::move(cache)};
}

Matrix predict(const Mlp& mlp, const Matrix& batch) {
  return forward(mlp, batch).first;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    double maxv = row[0];
    for (double v : row) maxv = std::max(maxv, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double e = std::exp(row[j] - maxv);
      probs(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < logits.cols(); ++j) probs(i, j) /= sum;
  }
  return probs;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* dlogits) {
  if (labels.size() != logits.rows()) {
    throw ShapeMismatchError("label count does not match batch size");
  }
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  if (dlogits) *dlogits = Matrix(n, k);

  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw ShapeMismatchError("label " + std::to_string(label) + " out of range for " +
                               std::to_string(k) + " classes");
    }
    const auto row = logits.row(i);
    double maxv = row[0];
    for (double v : row) maxv = std::max(maxv, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - maxv);
    const double log_norm = maxv + std::log(sum);
    loss += log_norm - row[label];
    if (dlogits) {
      for (std::size_t j = 0; j < k; ++j) {
        const double p = std::exp(row[j] - log_norm);
        (*dlogits)(i, j) = (p - (static_cast<std::size_t>(label) == j ? 1.0 : 0.0)) /
                           static_cast<double>(n);
      }
    }
  }
  return loss / static_cast<double>(n);
}

double compute_loss(const Mlp& mlp, const ForwardCache& cache, std::span<const int> labels) {
  if (cache.model_revision != mlp.revision) throw StaleCacheError();
  double loss = softmax_cross_entropy(cache.outputs.back(), labels, nullptr);
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto& act = mlp.layers[l].activation;
    if (act && act->is_velu() && act->velu_params().w2_mode == W2Mode::LossPenalty) {
      loss += act->velu_params().lambda_ot * cache.aux[l]->w2_squared;
    }
  }
  return loss;
}

Gradients backward(const Mlp& mlp, const ForwardCache& cache, std::span<const int> labels,
                   GradMode mode) {
  if (cache.model_revision != mlp.revision) throw StaleCacheError();

  Matrix delta;  // d(loss)/d(layer output), flowing backwards
  softmax_cross_entropy(cache.outputs.back(), labels, &delta);

  Gradients grads;
  grads.layers.resize(mlp.layers.size());

  for (std::size_t li = mlp.layers.size(); li-- > 0;) {
    const DenseLayer& layer = mlp.layers[li];
    const Matrix& z = cache.preacts[li];
    Matrix dz;

    if (!layer.activation.has_value()) {
      dz = std::move(delta);
    } else if (layer.activation->is_velu()) {
      const VeluParams& p = layer.activation->velu_params();
      const VeluForwardAux& aux = *cache.aux[li];
      const BatchStats& stats = aux.stats;
      const std::size_t count = z.size();
      const double dn = static_cast<double>(count);
      const auto zf = z.flat();
      const auto df = delta.flat();

      // dL/dlambda: y_i is linear in lambda with slope z_i * gate_i * adapt.
      double dlambda = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        dlambda += df[i] * zf[i] * sigmoid(arctan_arcsin(zf[i], p)) * aux.adapt_factor;
      }
      grads.layers[li].lambda = dlambda;

      dz = Matrix(z.rows(), z.cols());
      kernels::velu_frozen_deriv_map(dz.flat(), zf, p, aux.adapt_factor);
      auto dzf = dz.flat();
      for (std::size_t i = 0; i < count; ++i) dzf[i] *= df[i];

      if (mode == GradMode::Exact) {
        // Through-stats terms of the Jacobian transpose: a rank-one update
        // from the adaptive factor plus the broadcast W2 subtraction.
        const double th = std::tanh(p.momentum * p.mu_mod * stats.std);
        const double raw = 1.0 + p.gamma * th;
        const bool clipped = raw < p.clip_lo || raw > p.clip_hi;
        const double dadapt_dstd =
            clipped ? 0.0 : p.gamma * (1.0 - th * th) * p.momentum * p.mu_mod;

        double gate_sum = 0.0;  // sum_i d_i * lambda * z_i * gate_i
        double d_sum = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
          gate_sum += df[i] * p.lambda_scale * zf[i] * sigmoid(arctan_arcsin(zf[i], p));
          d_sum += df[i];
        }

        std::vector<double> w2grad;
        if (p.w2_mode == W2Mode::OutputSubtraction) w2grad = w2_grad_batch(zf, p);

        for (std::size_t j = 0; j < count; ++j) {
          const double ds = dstd_dx(zf[j], stats);
          double v = gate_sum * dadapt_dstd * ds;
          if (!w2grad.empty()) v -= p.lambda_ot * w2grad[j] * d_sum;
          dzf[j] += v;
        }
      }

      if (p.w2_mode == W2Mode::LossPenalty) {
        // d(lambda_ot * W2^2)/dz_j; always through the statistics, since a
        // frozen penalty would contribute nothing.
        const double dm = stats.mean - p.mu_target;
        const double dsd = stats.std - p.sigma_target;
        for (std::size_t j = 0; j < count; ++j) {
          dzf[j] += p.lambda_ot * (2.0 * dm / dn + 2.0 * dsd * dstd_dx(zf[j], stats));
        }
      }
    } else {
      dz = Matrix(z.rows(), z.cols());
      kernels::activation_deriv_map(dz.flat(), z.flat(), *layer.activation);
      auto dzf = dz.flat();
      const auto df = delta.flat();
      for (std::size_t i = 0; i < dzf.size(); ++i) dzf[i] *= df[i];
    }

    const Matrix& layer_input = li == 0 ? cache.input : cache.outputs[li - 1];
    LayerGrads& lg = grads.layers[li];
    lg.weights = Matrix(layer.fan_out(), layer.fan_in());
    kernels::matmul_tn(lg.weights, dz, layer_input);
    lg.biases.assign(layer.fan_out(), 0.0);
    for (std::size_t i = 0; i < dz.rows(); ++i) {
      for (std::size_t j = 0; j < dz.cols(); ++j) lg.biases[j] += dz(i, j);
    }

    if (li > 0) {
      delta = Matrix(dz.rows(), layer.fan_in());
      kernels::matmul(delta, dz, layer.weights);
    }
  }
  return grads;
}

double global_grad_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const LayerGrads& lg : grads.layers) {
    for (double v : lg.weights.flat()) sq += v * v;
    for (double v : lg.biases) sq += v * v;
    sq += lg.lambda * lg.lambda;
  }
  return std::sqrt(sq);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidParamsError("max_norm must be > 0");
  const double norm = global_grad_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (LayerGrads& lg : grads.layers) {
      for (double& v : lg.weights.flat()) v *= scale;
      for (double& v : lg.biases) v *= scale;
      lg.lambda *= scale;
    }
  }
  return norm;
}

std::string optimizer_name(const OptimizerConfig& cfg) {
  struct Visitor {
    std::string operator()(const SgdConfig&) const { return "sgd"; }
    std::string operator()(const AdamConfig&) const { return "adam"; }
    std::string operator()(const RmsPropConfig&) const { return "rmsprop"; }
    std::string operator()(const NadamConfig&) const { return "nadam"; }
  };
  return std::visit(Visitor{}, cfg);
}

namespace {

// Slot A is the momentum / first-moment buffer, slot B the second moment.

inline void sgd_scalar(double& p, double g, double& v, const SgdConfig& c) {
  v = c.momentum * v + g;
  p -= c.lr * v;
}

inline void adam_scalar(double& p, double g, double& m, double& v, std::size_t t,
                        const AdamConfig& c) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g * g;
  const double mhat = m / (1.0 - std::pow(c.beta1, static_cast<double>(t)));
  const double vhat = v / (1.0 - std::pow(c.beta2, static_cast<double>(t)));
  p -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
}

inline void rmsprop_scalar(double& p, double g, double& s, const RmsPropConfig& c) {
  s = c.rho * s + (1.0 - c.rho) * g * g;
  p -= c.lr * g / (std::sqrt(s) + c.eps);
}

inline void nadam_scalar(double& p, double g, double& m, double& v, std::size_t t,
                         const NadamConfig& c) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g * g;
  const double beta1_t = std::pow(c.beta1, static_cast<double>(t));
  const double vhat = v / (1.0 - std::pow(c.beta2, static_cast<double>(t)));
  const double lookahead =
      c.beta1 * m / (1.0 - beta1_t * c.beta1) + (1.0 - c.beta1) * g / (1.0 - beta1_t);
  p -= c.lr * lookahead / (std::sqrt(vhat) + c.eps);
}

struct TensorUpdate {
  const OptimizerConfig& cfg;
  std::size_t t;

  void operator()(std::span<double> p, std::span<const double> g, std::span<double> a,
                  std::span<double> b) const {
    if (const auto* sgd = std::get_if<SgdConfig>(&cfg)) {
      for (std::size_t i = 0; i < p.size(); ++i) sgd_scalar(p[i], g[i], a[i], *sgd);
    } else if (const auto* adam = std::get_if<AdamConfig>(&cfg)) {
      for (std::size_t i = 0; i < p.size(); ++i) adam_scalar(p[i], g[i], a[i], b[i], t, *adam);
    } else if (const auto* rms = std::get_if<RmsPropConfig>(&cfg)) {
      for (std::size_t i = 0; i < p.size(); ++i) rmsprop_scalar(p[i], g[i], b[i], *rms);
    } else if (const auto* nadam = std::get_if<NadamConfig>(&cfg)) {
      for (std::size_t i = 0; i < p.size(); ++i) nadam_scalar(p[i], g[i], a[i], b[i], t, *nadam);
    }
  }
};

}  // namespace

OptimizerState::OptimizerState(OptimizerConfig cfg, const Mlp& model) : cfg_(cfg) {
  slots_.resize(model.layers.size());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const DenseLayer& layer = model.layers[l];
    slots_[l].w_a = Matrix(layer.fan_out(), layer.fan_in());
    slots_[l].w_b = Matrix(layer.fan_out(), layer.fan_in());
    slots_[l].b_a.assign(layer.fan_out(), 0.0);
    slots_[l].b_b.assign(layer.fan_out(), 0.0);
  }
}

void OptimizerState::step(Mlp& model, const Gradients& grads) {
  if (grads.layers.size() != model.layers.size() || slots_.size() != model.layers.size()) {
    throw ShapeMismatchError("gradient/slot layer count does not match the model");
  }
  ++step_count_;
  const TensorUpdate update{cfg_, step_count_};

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    DenseLayer& layer = model.layers[l];
    const LayerGrads& lg = grads.layers[l];
    if (!lg.weights.same_shape(layer.weights) || lg.biases.size() != layer.biases.size()) {
      throw ShapeMismatchError("gradient shapes do not match layer " + std::to_string(l));
    }
    update(layer.weights.flat(), lg.weights.flat(), slots_[l].w_a.flat(), slots_[l].w_b.flat());
    update(layer.biases, lg.biases, slots_[l].b_a, slots_[l].b_b);
    if (layer.activation && layer.activation->is_velu()) {
      double& lambda = layer.activation->velu_params().lambda_scale;
      update({&lambda, 1}, {&lg.lambda, 1}, {&slots_[l].l_a, 1}, {&slots_[l].l_b, 1});
    }
  }
  ++model.revision;
}

void save_checkpoint(const Mlp& mlp, const std::string& path) {
  nlohmann::json j;
  j["format"] = "velu-kit-checkpoint";
  j["version"] = 1;
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& layer : mlp.layers) {
    nlohmann::json lj;
    lj["in"] = layer.fan_in();
    lj["out"] = layer.fan_out();
    lj["weights"] = std::vector<double>(layer.weights.flat().begin(), layer.weights.flat().end());
    lj["biases"] = layer.biases;
    lj["activation"] =
        layer.activation ? detail::activation_to_json(*layer.activation) : nlohmann::json(nullptr);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint file for writing: " + path);
  out << j.dump(2) << "\n";
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint file: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "velu-kit-checkpoint") {
    throw Error("not a velu-kit checkpoint: " + path);
  }
  if (j.value("version", 0) != 1) {
    throw Error("unsupported checkpoint version in " + path);
  }

  Mlp mlp;
  for (const auto& lj : j.at("layers")) {
    DenseLayer layer;
    const std::size_t in_dim = lj.at("in").get<std::size_t>();
    const std::size_t out_dim = lj.at("out").get<std::size_t>();
    const auto weights = lj.at("weights").get<std::vector<double>>();
    if (weights.size() != in_dim * out_dim) {
      throw Error("checkpoint weight count does not match declared shape");
    }
    layer.weights = Matrix(out_dim, in_dim);
    std::copy(weights.begin(), weights.end(), layer.weights.data());
    layer.biases = lj.at("biases").get<std::vector<double>>();
    if (layer.biases.size() != out_dim) {
      throw Error("checkpoint bias count does not match declared shape");
    }
    if (!lj.at("activation").is_null()) {
      layer.activation = detail::activation_from_json(lj.at("activation"));
    }
    mlp.layers.push_back(std::move(layer));
  }
  mlp.revision = 1;
  return mlp;
}

std::string parameter_digest(const Mlp& mlp) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto mix = [&hash](double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      hash ^= (bits >> (8 * i)) & 0xff;
      hash *= 0x100000001b3ULL;
    }
  };
  for (const DenseLayer& layer : mlp.layers) {
    for (double v : layer.weights.flat()) mix(v);
    for (double v : layer.biases) mix(v);
    if (layer.activation && layer.activation->is_velu()) {
      mix(layer.activation->velu_params().lambda_scale);
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace velu
