#pragma once

#include "graphtext/trainer.hpp"

#include "json.hpp"

#include <string>

namespace graphtext::detail {

nlohmann::json train_config_json(const TrainConfig& config);
/// `where` prefixes error messages (e.g. "train").
TrainConfig train_config_from(const nlohmann::json& j, const std::string& where, bool require_epochs);

}  // namespace graphtext::detail
