#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "physio/gbdt/model.hpp"

namespace physio::gbdt {

inline constexpr const char* kModelFormat = "physio-gbdt";
inline constexpr int kModelVersion = 1;

nlohmann::json config_to_json(const TrainConfig& cfg);
// Fields absent from `j` keep their value from `base`; unknown keys are rejected.
TrainConfig config_from_json(const nlohmann::json& j, const TrainConfig& base = {});

nlohmann::json model_to_json(const GbdtModel& model);
GbdtModel model_from_json(const nlohmann::json& j);

void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path);

}  // namespace physio::gbdt
