#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physio/gbdt/matrix.hpp"

namespace physio::gbdt {

/// Flat tree node. Internal nodes have left/right >= 0; x < threshold goes left.
struct TreeNode {
  int split_feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf value (raw Newton step; shrinkage applied at prediction)
  double cover = 0.0;  // sum of training weights reaching the node

  bool is_leaf() const noexcept { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int leaf_count() const;
  int depth() const;  // edges on the longest root-to-leaf path
};

struct TrainConfig {
  double learning_rate = 0.1;
  double feature_fraction = 1.0;
  int num_leaves = 15;
  int min_data_in_leaf = 10;
  int max_depth = 8;
  double goss_a = 0.2;
  double goss_b = 0.1;
  double lambda_l2 = 0.0;
  double min_sum_hessian = 1e-3;
  int max_rounds = 500;
  int early_stop = 30;
  std::uint64_t seed = 0;

  // Structural sanity only; the paper's search ranges live in SearchSpace.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct GbdtModel {
  std::vector<Tree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;  // log-odds of the training prior
  std::vector<std::string> feature_names;
  int best_iteration = 0;   // trees used for prediction
  TrainConfig config;
  std::vector<double> train_logloss;  // per round, after adding the tree
  std::vector<double> valid_logloss;  // index 0 is the prior-only model

  std::size_t num_features() const noexcept { return feature_names.size(); }
  std::span<const Tree> active_trees() const& {
    return {trees.data(), static_cast<std::size_t>(best_iteration)};
  }
};

struct Prediction {
  double margin = 0.0;
  double probability = 0.5;
  int label() const noexcept { return probability > 0.5 ? 1 : 0; }
};

double sigmoid(double margin);

Prediction predict(const GbdtModel& model, std::span<const double> x);
std::vector<Prediction> predict(const GbdtModel& model, const Matrix& x);

// Mean binary logloss of probabilities against 0/1 labels, clipped at 1e-15.
double logloss(std::span<const double> probability, std::span<const int> labels);

}  // namespace physio::gbdt
