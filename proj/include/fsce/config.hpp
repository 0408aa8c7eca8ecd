#pragma once

#include "fsce/eval/experiments.hpp"

#include <json.hpp>

namespace fsce {

// Strict config loading: unknown keys anywhere are rejected.
AppConfig load_app_config(const std::filesystem::path& path);
AppConfig app_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json app_config_to_json(const AppConfig& cfg);

nlohmann::ordered_json model_config_to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const nlohmann::json& j);

std::string config_hash(const nlohmann::ordered_json& j);

}  // namespace fsce
