#include "velu/params.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace velu {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParamsError("invalid VeLU parameters: " + what);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw InvalidParamsError("value for '" + key + "' is not a number: '" + value + "'");
  }
  if (used != value.size()) {
    throw InvalidParamsError("value for '" + key + "' is not a number: '" + value + "'");
  }
  return v;
}

}  // namespace

void VeluParams::validate() const {
  require(std::isfinite(lambda_scale), "lambda_scale must be finite");
  require(std::isfinite(alpha) && alpha > 0.0, "alpha must be > 0");
  require(std::isfinite(beta1) && beta1 > 0.0, "beta1 must be > 0");
  require(std::isfinite(beta2) && beta2 > 0.0, "beta2 must be > 0");
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be >= 0");
  require(std::isfinite(mu_mod), "mu_mod must be finite");
  require(std::isfinite(momentum), "momentum must be finite");
  require(std::isfinite(lambda_ot) && lambda_ot >= 0.0, "lambda_ot must be >= 0");
  require(std::isfinite(epsilon) && epsilon > 0.0, "epsilon must be > 0");
  require(std::isfinite(clip_lo) && std::isfinite(clip_hi), "clip bounds must be finite");
  require(clip_lo > 0.0, "clip_lo must be > 0");
  require(clip_lo <= 1.0 && 1.0 <= clip_hi, "clip bounds must satisfy 0 < clip_lo <= 1 <= clip_hi");
  require(std::isfinite(mu_target), "mu_target must be finite");
  require(std::isfinite(sigma_target) && sigma_target > 0.0, "sigma_target must be > 0");
}

std::string activation_name(const ActivationKind& kind) {
  switch (kind.tag()) {
    case ActivationKind::Tag::VeLU:
      return "velu";
    case ActivationKind::Tag::ReLU:
      return "relu";
    case ActivationKind::Tag::ReLU6:
      return "relu6";
    case ActivationKind::Tag::Swish:
      return "swish";
    case ActivationKind::Tag::GELU:
      return kind.gelu_form() == GeluForm::Erf ? "gelu" : "gelu_tanh";
  }
  return "unknown";
}

ActivationKind parse_activation(const std::string& name, const VeluParams& velu_params) {
  if (name == "velu") return ActivationKind::velu(velu_params);
  if (name == "relu") return ActivationKind::relu();
  if (name == "relu6") return ActivationKind::relu6();
  if (name == "swish") return ActivationKind::swish();
  if (name == "gelu") return ActivationKind::gelu(GeluForm::Erf);
  if (name == "gelu_tanh") return ActivationKind::gelu(GeluForm::TanhApprox);
  throw InvalidParamsError("unknown activation '" + name +
                           "' (expected velu, relu, relu6, swish, gelu, gelu_tanh)");
}

void apply_param_override(VeluParams& params, const std::string& key, const std::string& value) {
  if (key == "lambda" || key == "lambda_scale") {
    params.lambda_scale = parse_double(key, value);
  } else if (key == "alpha") {
    params.alpha = parse_double(key, value);
  } else if (key == "beta1") {
    params.beta1 = parse_double(key, value);
  } else if (key == "beta2") {
    params.beta2 = parse_double(key, value);
  } else if (key == "gamma") {
    params.gamma = parse_double(key, value);
  } else if (key == "mu_mod") {
    params.mu_mod = parse_double(key, value);
  } else if (key == "momentum") {
    params.momentum = parse_double(key, value);
  } else if (key == "lambda_ot") {
    params.lambda_ot = parse_double(key, value);
  } else if (key == "epsilon") {
    params.epsilon = parse_double(key, value);
  } else if (key == "clip_lo") {
    params.clip_lo = parse_double(key, value);
  } else if (key == "clip_hi") {
    params.clip_hi = parse_double(key, value);
  } else if (key == "mu_target") {
    params.mu_target = parse_double(key, value);
  } else if (key == "sigma_target") {
    params.sigma_target = parse_double(key, value);
  } else if (key == "w2_mode") {
    if (value == "subtract") {
      params.w2_mode = W2Mode::OutputSubtraction;
    } else if (value == "penalty") {
      params.w2_mode = W2Mode::LossPenalty;
    } else if (value == "off") {
      params.w2_mode = W2Mode::Off;
    } else {
      throw InvalidParamsError("w2_mode must be subtract, penalty, or off (got '" + value + "')");
    }
  } else if (key == "std_mode") {
    if (value == "uncentered") {
      params.std_mode = StdMode::Uncentered;
    } else if (value == "centered") {
      params.std_mode = StdMode::Centered;
    } else {
      throw InvalidParamsError("std_mode must be uncentered or centered (got '" + value + "')");
    }
  } else {
    throw InvalidParamsError("unknown parameter key '" + key + "'");
  }
}

}  // namespace velu
