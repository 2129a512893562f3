#include "json_util.hpp"

#include "velu/errors.hpp"

namespace velu::detail {

namespace {

std::string w2_mode_name(W2Mode mode) {
  switch (mode) {
    case W2Mode::OutputSubtraction:
      return "subtract";
    case W2Mode::LossPenalty:
      return "penalty";
    case W2Mode::Off:
      return "off";
  }
  return "subtract";
}

W2Mode w2_mode_from(const std::string& s) {
  if (s == "subtract") return W2Mode::OutputSubtraction;
  if (s == "penalty") return W2Mode::LossPenalty;
  if (s == "off") return W2Mode::Off;
  throw Error("unknown w2_mode '" + s + "'");
}

}  // namespace

nlohmann::json velu_params_to_json(const VeluParams& p) {
  return nlohmann::json{{"lambda_scale", p.lambda_scale},
                        {"alpha", p.alpha},
                        {"beta1", p.beta1},
                        {"beta2", p.beta2},
                        {"gamma", p.gamma},
                        {"mu_mod", p.mu_mod},
                        {"momentum", p.momentum},
                        {"lambda_ot", p.lambda_ot},
                        {"epsilon", p.epsilon},
                        {"clip_lo", p.clip_lo},
                        {"clip_hi", p.clip_hi},
                        {"mu_target", p.mu_target},
                        {"sigma_target", p.sigma_target},
                        {"w2_mode", w2_mode_name(p.w2_mode)},
                        {"std_mode", p.std_mode == StdMode::Uncentered ? "uncentered" : "centered"}};
}

VeluParams velu_params_from_json(const nlohmann::json& j) {
  VeluParams p;
  p.lambda_scale = j.at("lambda_scale").get<double>();
  p.alpha = j.at("alpha").get<double>();
  p.beta1 = j.at("beta1").get<double>();
  p.beta2 = j.at("beta2").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.mu_mod = j.at("mu_mod").get<double>();
  p.momentum = j.at("momentum").get<double>();
  p.lambda_ot = j.at("lambda_ot").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.clip_lo = j.at("clip_lo").get<double>();
  p.clip_hi = j.at("clip_hi").get<double>();
  p.mu_target = j.at("mu_target").get<double>();
  p.sigma_target = j.at("sigma_target").get<double>();
  p.w2_mode = w2_mode_from(j.at("w2_mode").get<std::string>());
  const std::string sm = j.at("std_mode").get<std::string>();
  if (sm == "uncentered") {
    p.std_mode = StdMode::Uncentered;
  } else if (sm == "centered") {
    p.std_mode = StdMode::Centered;
  } else {
    throw Error("unknown std_mode '" + sm + "'");
  }
  p.validate();
  return p;
}

nlohmann::json activation_to_json(const ActivationKind& kind) {
  nlohmann::json j;
  j["kind"] = activation_name(kind);
  if (kind.is_velu()) j["params"] = velu_params_to_json(kind.velu_params());
  return j;
}

ActivationKind activation_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "velu") return ActivationKind::velu(velu_params_from_json(j.at("params")));
  return parse_activation(kind);
}

nlohmann::json optimizer_to_json(const OptimizerConfig& cfg) {
  nlohmann::json j;
  j["kind"] = optimizer_name(cfg);
  if (const auto* sgd = std::get_if<SgdConfig>(&cfg)) {
    j["lr"] = sgd->lr;
    j["momentum"] = sgd->momentum;
  } else if (const auto* adam = std::get_if<AdamConfig>(&cfg)) {
    j["lr"] = adam->lr;
    j["beta1"] = adam->beta1;
    j["beta2"] = adam->beta2;
    j["eps"] = adam->eps;
  } else if (const auto* rms = std::get_if<RmsPropConfig>(&cfg)) {
    j["lr"] = rms->lr;
    j["rho"] = rms->rho;
    j["eps"] = rms->eps;
  } else if (const auto* nadam = std::get_if<NadamConfig>(&cfg)) {
    j["lr"] = nadam->lr;
    j["beta1"] = nadam->beta1;
    j["beta2"] = nadam->beta2;
    j["eps"] = nadam->eps;
  }
  return j;
}

OptimizerConfig optimizer_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sgd") {
    SgdConfig c;
    c.lr = j.at("lr").get<double>();
    c.momentum = j.at("momentum").get<double>();
    return c;
  }
  if (kind == "adam") {
    AdamConfig c;
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.eps = j.at("eps").get<double>();
    return c;
  }
  if (kind == "rmsprop") {
    RmsPropConfig c;
    c.lr = j.at("lr").get<double>();
    c.rho = j.at("rho").get<double>();
    c.eps = j.at("eps").get<double>();
    return c;
  }
  if (kind == "nadam") {
    NadamConfig c;
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.eps = j.at("eps").get<double>();
    return c;
  }
  throw Error("unknown optimizer kind '" + kind + "'");
}

}  // namespace velu::detail
