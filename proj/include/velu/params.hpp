#pragma once

#include <string>

#include "velu/errors.hpp"

namespace velu {

// Where the Wasserstein-2 alignment term acts.
//   OutputSubtraction: the scaled distance is subtracted from every batch output.
//   LossPenalty:       the squared distance is added to the training loss instead.
//   Off:               the term is disabled (the distance is still reported).
enum class W2Mode { OutputSubtraction, LossPenalty, Off };

// Batch standard-deviation estimator.
//   Uncentered: sqrt(E[x^2] + epsilon)
//   Centered:   sqrt(Var(x) + epsilon), population variance
enum class StdMode { Uncentered, Centered };

enum class GeluForm { Erf, TanhApprox };

// Scalar hyperparameters of the VeLU activation plus its stability controls.
// Defaults sit at the midpoints/endpoints of the recommended stable ranges.
struct VeluParams {
  double lambda_scale = 1.0;  // global trainable amplitude
  double alpha = 0.1;         // nonlinearity strength
  double beta1 = 0.1;         // arctan input scale
  double beta2 = 0.1;         // arcsin input scale
  double gamma = 0.1;         // adaptive-scaling amplitude
  double mu_mod = 1.0;        // modulation sensitivity (multiplies m * sigma_x inside tanh)
  double momentum = 0.1;      // variance sensitivity
  double lambda_ot = 0.01;    // Wasserstein penalty weight
  double epsilon = 1e-3;      // variance floor
  double clip_lo = 0.5;       // adaptive-factor clamp, lower bound
  double clip_hi = 2.0;       // adaptive-factor clamp, upper bound
  double mu_target = 0.0;     // target Gaussian mean
  double sigma_target = 1.0;  // target Gaussian std
  W2Mode w2_mode = W2Mode::OutputSubtraction;
  StdMode std_mode = StdMode::Uncentered;

  // Throws InvalidParamsError naming the offending field.
  void validate() const;
};

// Tagged choice of activation. Every tag evaluates to a total function on
// finite inputs; VeLU achieves this by clamping the arcsin argument.
class ActivationKind {
 public:
  enum class Tag { VeLU, ReLU, ReLU6, Swish, GELU };

  static ActivationKind relu() { return ActivationKind(Tag::ReLU); }
  static ActivationKind relu6() { return ActivationKind(Tag::ReLU6); }
  static ActivationKind swish() { return ActivationKind(Tag::Swish); }
  static ActivationKind gelu(GeluForm form = GeluForm::Erf) {
    ActivationKind k(Tag::GELU);
    k.gelu_form_ = form;
    return k;
  }
  // Validates the parameters; construction of a VeLU kind with invalid
  // parameters throws InvalidParamsError.
  static ActivationKind velu(VeluParams p = VeluParams{}) {
    p.validate();
    ActivationKind k(Tag::VeLU);
    k.velu_ = p;
    return k;
  }

  Tag tag() const { return tag_; }
  bool is_velu() const { return tag_ == Tag::VeLU; }
  GeluForm gelu_form() const { return gelu_form_; }

  const VeluParams& velu_params() const { return velu_; }
  // Mutable access for the trainable lambda; callers keep other fields valid.
  VeluParams& velu_params() { return velu_; }

 private:
  explicit ActivationKind(Tag t) : tag_(t) {}

  Tag tag_;
  VeluParams velu_{};
  GeluForm gelu_form_ = GeluForm::Erf;
};

// Canonical lowercase name: velu, relu, relu6, swish, gelu, gelu_tanh.
std::string activation_name(const ActivationKind& kind);

// Parses a canonical name; VeLU picks up the supplied parameters.
// Throws InvalidParamsError on an unknown name.
ActivationKind parse_activation(const std::string& name, const VeluParams& velu_params = VeluParams{});

// Applies a "key=value" override to a parameter set; used by the CLI and by
// config files. Throws InvalidParamsError on unknown keys or unparsable values.
void apply_param_override(VeluParams& params, const std::string& key, const std::string& value);

}  // namespace velu
