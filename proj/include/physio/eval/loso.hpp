#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physio/eval/dataset.hpp"
#include "physio/eval/metrics.hpp"
#include "physio/gbdt/model.hpp"
#include "physio/gbdt/search.hpp"
#include "physio/shap/treeshap.hpp"

namespace physio::eval {

struct Fold {
  int subject = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

std::vector<Fold> loso_split(std::span<const int> subjects);

// per_fold: inner search on each fold's training subjects.
// global: one search over every row (leaks test subjects; reported as such).
// fixed: no search, `base` is used as is.
enum class SearchMode { per_fold, global, fixed };

std::string_view search_mode_name(SearchMode m);
std::optional<SearchMode> parse_search_mode(std::string_view s);

struct LosoConfig {
  gbdt::TrainConfig base;
  gbdt::SearchSpace space;
  int search_iterations = 300;
  SearchMode mode = SearchMode::per_fold;
  std::uint64_t seed = 0;
  double label_threshold = 5.0;
  bool explain = false;
  bool explain_interactions = false;
  bool audit = false;  // record which rows every stage touched
  int jobs = 0;        // fold workers; 0 = OpenMP default

  void validate() const;
};

// Audit stages.
inline constexpr const char* kStageSearch = "search";
inline constexpr const char* kStageTrain = "train";
inline constexpr const char* kStageEarlyStop = "early_stop";
inline constexpr const char* kStageRanking = "ranking";
inline constexpr const char* kStageSelection = "selection";

struct FoldResult {
  int subject = 0;
  bool ok = false;
  std::string failure;
  Metrics metrics;
  gbdt::TrainConfig config;
  int best_iteration = 0;
  std::vector<std::size_t> test_rows;
  std::vector<double> probabilities;
  std::vector<int> predicted;
  std::map<std::string, std::vector<std::size_t>> touched;
};

struct CvReport {
  signal::Target target = signal::Target::valence;
  SearchMode mode = SearchMode::per_fold;
  std::vector<FoldResult> folds;
  Summary accuracy;
  Summary f1;
  int failed_folds = 0;
  // Test-row explanations pooled across folds, parallel to explained_rows.
  std::vector<std::size_t> explained_rows;
  std::vector<shap::ShapExplanation> explanations;
  std::vector<shap::InteractionMatrix> interactions;
};

CvReport run_loso(const Dataset& data, signal::Target target, const LosoConfig& cfg);

// Deployable model on every row: search (unless mode is fixed) over all subjects,
// then fit with early stopping on a held-out 10% of subjects.
gbdt::GbdtModel fit_full(const Dataset& data, signal::Target target, const LosoConfig& cfg);

struct SelectionReport {
  signal::Target target = signal::Target::valence;
  std::vector<std::size_t> ks;
  std::vector<shap::SubsetScore> scores;  // mean and standard error across folds, per k
  std::size_t best_k_accuracy = 0;
  std::size_t best_k_f1 = 0;
  int failed_folds = 0;
  std::vector<FoldResult> folds;  // audit trail only; metrics are per full model
};

// Leakage-safe selection sweep: every fold ranks features by mean |SHAP| of its
// own training rows, then evaluates nested top-k prefixes on its test subject.
// Fold configs are reused from `prior` when given, else chosen as in run_loso.
SelectionReport run_selection(const Dataset& data, signal::Target target, const LosoConfig& cfg,
                              const CvReport* prior = nullptr);

}  // namespace physio::eval
