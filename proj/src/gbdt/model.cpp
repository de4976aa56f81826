#include "physio/gbdt/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "physio/error.hpp"

namespace physio::gbdt {

void TrainConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::kInvalidArgument,
          "learning_rate must be positive");
  require(feature_fraction > 0.0 && feature_fraction <= 1.0, ErrorKind::kInvalidArgument,
          "feature_fraction must lie in (0, 1]");
  require(num_leaves >= 1, ErrorKind::kInvalidArgument, "num_leaves must be >= 1");
  require(min_data_in_leaf >= 1, ErrorKind::kInvalidArgument, "min_data_in_leaf must be >= 1");
  require(max_depth >= 1, ErrorKind::kInvalidArgument, "max_depth must be >= 1");
  require(goss_a > 0.0 && goss_a <= 1.0, ErrorKind::kInvalidArgument, "goss_a must lie in (0, 1]");
  require(goss_b >= 0.0 && goss_a + goss_b <= 1.0 + 1e-12, ErrorKind::kInvalidArgument,
          "goss_b must lie in [0, 1 - goss_a]");
  require(goss_a >= 1.0 || goss_b > 0.0, ErrorKind::kInvalidArgument,
          "goss_b must be positive when goss_a < 1");
  require(lambda_l2 >= 0.0, ErrorKind::kInvalidArgument, "lambda_l2 must be >= 0");
  require(min_sum_hessian >= 0.0, ErrorKind::kInvalidArgument, "min_sum_hessian must be >= 0");
  require(max_rounds >= 0, ErrorKind::kInvalidArgument, "max_rounds must be >= 0");
  require(early_stop >= 1, ErrorKind::kInvalidArgument, "early_stop must be >= 1");
}

double Tree::predict(std::span<const double> x) const {
  int idx = 0;
  while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
    idx = x[static_cast<std::size_t>(n.split_feature)] < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(idx)].value;
}

int Tree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  // Children are always appended after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& n = nodes[i];
    if (n.is_leaf()) {
      best = std::max(best, depth[i]);
      continue;
    }
    depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
  }
  return best;
}

double sigmoid(double margin) {
  if (margin >= 0.0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

Prediction predict(const GbdtModel& model, std::span<const double> x) {
  require(x.size() == model.num_features(), ErrorKind::kInvalidArgument,
          "feature vector has " + std::to_string(x.size()) + " entries, model expects " +
              std::to_string(model.num_features()));
  double sum = 0.0;
  for (const Tree& t : model.active_trees()) sum += t.predict(x);
  Prediction p;
  p.margin = model.base_score + model.learning_rate * sum;
  p.probability = sigmoid(p.margin);
  return p;
}

std::vector<Prediction> predict(const GbdtModel& model, const Matrix& x) {
  std::vector<Prediction> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(model, x.row(r));
  return out;
}

double logloss(std::span<const double> probability, std::span<const int> labels) {
  require(probability.size() == labels.size() && !labels.empty(), ErrorKind::kInvalidArgument,
          "logloss needs equal non-empty inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probability[i], 1e-15, 1.0 - 1e-15);
    s -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return s / static_cast<double>(labels.size());
}

}  // namespace physio::gbdt
