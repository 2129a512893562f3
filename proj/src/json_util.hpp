#pragma once

#include <json.hpp>

#include "velu/nn.hpp"
#include "velu/params.hpp"

namespace velu::detail {

nlohmann::json velu_params_to_json(const VeluParams& p);
VeluParams velu_params_from_json(const nlohmann::json& j);

nlohmann::json activation_to_json(const ActivationKind& kind);
ActivationKind activation_from_json(const nlohmann::json& j);

nlohmann::json optimizer_to_json(const OptimizerConfig& cfg);
OptimizerConfig optimizer_from_json(const nlohmann::json& j);

}  // namespace velu::detail
