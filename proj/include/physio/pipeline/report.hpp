#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "physio/eval/dataset.hpp"
#include "physio/eval/loso.hpp"
#include "physio/shap/treeshap.hpp"

namespace physio::pipeline {

struct TargetResult {
  eval::CvReport cv;
  shap::ImportanceRanking importance;  // from the pooled held-out explanations
  std::optional<eval::SelectionReport> selection;
};

struct ReportInputs {
  nlohmann::json config;  // echoed verbatim into report.json
  const eval::Dataset* data = nullptr;
  double label_threshold = 5.0;
  std::vector<TargetResult> targets;
};

inline constexpr const char* kReportFormat = "physio-report";
inline constexpr int kReportVersion = 1;
inline constexpr std::size_t kInteractionTop = 10;
inline constexpr std::size_t kEffectFeatures = 3;

// Mean |phi_ij| over rows. The diagonal holds mean |phi_ii|.
shap::InteractionMatrix mean_abs_interactions(const std::vector<shap::InteractionMatrix>& rows);

nlohmann::json report_to_json(const ReportInputs& in);

// Inverse of report_to_json for the summary fields (fold metrics, configs,
// rankings, selection curves). Per-row predictions and explanations are not stored.
std::vector<TargetResult> report_targets_from_json(const nlohmann::json& j);

// Writes report.json, predictions.csv, importance.csv and, when available,
// selection_curve.csv, interactions.csv and effects_<feature>.csv.
// Output is byte-identical for identical inputs. Returns the files written.
std::vector<std::filesystem::path> emit_report(const ReportInputs& in,
                                               const std::filesystem::path& out_dir);

}  // namespace physio::pipeline
