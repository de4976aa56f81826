#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "physio/eval/loso.hpp"
#include "physio/pipeline/extract.hpp"
#include "physio/pipeline/synthetic.hpp"

namespace physio::pipeline {

// Everything a CLI run needs. Data comes from `input` (DEAP-layout CSV tree) or,
// when that is empty, from the synthetic generator.
struct RunConfig {
  std::filesystem::path input;
  SyntheticSpec synthetic;
  std::vector<signal::Target> targets = {signal::kAllTargets.begin(), signal::kAllTargets.end()};
  ExtractionConfig extraction;
  eval::LosoConfig loso;
  std::filesystem::path output = "out";
  bool paper_mode = false;

  void validate() const;
};

// Every level rejects unknown keys with kConfig. Absent keys keep `base` values.
RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& base = {});
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& file, const RunConfig& base = {});

// Resets every analysis parameter to the published setting (window 12, spans
// 64/5, m = 2, r = 0.15, n = 2, 300 search iterations, 500 rounds, patience 30).
// Returns the dotted names of fields that changed.
std::vector<std::string> apply_paper_mode(RunConfig& cfg);

}  // namespace physio::pipeline
