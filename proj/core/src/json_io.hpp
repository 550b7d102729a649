#pragma once

// JSON conversions shared by the checkpoint, config and pipeline code.

#include <nlohmann/json.hpp>

#include "xlgen/model.hpp"

namespace xlgen::json_io {

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const ModelConfig& cfg);

// Keys absent from `j` keep their value in `base`; unknown keys throw
// ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

// Throws ConfigError naming `context` when `j` holds a key outside `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& context);

}  // namespace xlgen::json_io
