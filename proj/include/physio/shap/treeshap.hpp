#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "physio/gbdt/matrix.hpp"
#include "physio/gbdt/model.hpp"

namespace physio::shap {

// Attributions in margin (log-odds) units.
struct ShapExplanation {
  std::vector<double> values;
  double base_value = 0.0;
};

// Row-major n x n matrix for one sample; diagonal holds main effects.
struct InteractionMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
};

struct ImportanceEntry {
  std::string feature;
  std::size_t index = 0;  // canonical position
  double mean_abs_shap = 0.0;
};

using ImportanceRanking = std::vector<ImportanceEntry>;

// Throws model-incompatible when a used node lacks a positive finite cover.
void check_explainable(const gbdt::GbdtModel& model);

// Expected margin under the cover-weighted training distribution.
double expected_margin(const gbdt::GbdtModel& model);

ShapExplanation shap_values(const gbdt::GbdtModel& model, std::span<const double> x);
std::vector<ShapExplanation> shap_values(const gbdt::GbdtModel& model, const gbdt::Matrix& x);

// Exhaustive subset evaluation of the same path-dependent value function; n <= 20.
ShapExplanation brute_force_shapley(const gbdt::GbdtModel& model, std::span<const double> x);

// v(S): margin with features outside `present` marginalised by cover proportions.
double path_dependent_value(const gbdt::GbdtModel& model, std::span<const double> x,
                            std::span<const char> present);

InteractionMatrix shap_interactions(const gbdt::GbdtModel& model, std::span<const double> x);
std::vector<InteractionMatrix> shap_interactions(const gbdt::GbdtModel& model,
                                                 const gbdt::Matrix& x);

ImportanceRanking global_importance(std::span<const ShapExplanation> explanations,
                                    std::span<const std::string> feature_names);

struct SubsetScore {
  double accuracy = 0.0;
  double accuracy_se = 0.0;
  double f1 = 0.0;
  double f1_se = 0.0;
};

struct SelectionPoint {
  std::size_t k = 0;
  SubsetScore score;
};

struct SelectionResult {
  std::vector<SelectionPoint> curve;  // k = 1..F
  std::size_t best_k_accuracy = 0;
  std::size_t best_k_f1 = 0;
  std::vector<std::string> best_subset_accuracy;
  std::vector<std::string> best_subset_f1;
};

// Receives the canonical feature indices of the k top-ranked features.
using SubsetEvaluator = std::function<SubsetScore(const std::vector<std::size_t>& features)>;

// Evaluates nested prefixes of the ranking; ties in the argmax keep the smaller k.
SelectionResult select_features(const ImportanceRanking& ranking, const SubsetEvaluator& evaluate);

}  // namespace physio::shap
