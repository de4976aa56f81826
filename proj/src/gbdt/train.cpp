#include "physio/gbdt/train.hpp"

#include <cmath>

#include "physio/error.hpp"
#include "physio/gbdt/goss.hpp"
#include "physio/gbdt/tree_builder.hpp"
#include "physio/util/rng.hpp"

namespace physio::gbdt {

namespace {

constexpr std::uint64_t kGossStream = 1;
constexpr std::uint64_t kFeatureStream = 2;

void check_labels(std::span<const int> y, const char* what) {
  for (int v : y) {
    require(v == 0 || v == 1, ErrorKind::kInvalidArgument,
            std::string(what) + " labels must be 0 or 1");
  }
}

double mean_logloss(std::span<const double> margin, std::span<const int> y) {
  std::vector<double> p(margin.size());
  for (std::size_t i = 0; i < margin.size(); ++i) p[i] = sigmoid(margin[i]);
  return logloss(p, y);
}

}  // namespace

std::vector<std::string> default_feature_names(std::size_t n) {
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = "f" + std::to_string(i);
  return names;
}

GbdtModel train(const Matrix& x, std::span<const int> y, const ValidationSet& valid,
                const TrainConfig& cfg, std::vector<std::string> feature_names) {
  cfg.validate();
  const std::size_t n = x.rows();
  require(n > 0 && x.cols() > 0, ErrorKind::kInvalidArgument, "training matrix is empty");
  require(y.size() == n, ErrorKind::kInvalidArgument, "label count does not match rows");
  check_labels(y, "training");
  if (feature_names.empty()) feature_names = default_feature_names(x.cols());
  require(feature_names.size() == x.cols(), ErrorKind::kInvalidArgument,
          "feature name count does not match columns");
  if (valid.present()) {
    require(valid.x->cols() == x.cols(), ErrorKind::kInvalidArgument,
            "validation matrix has a different feature count");
    require(valid.y.size() == valid.x->rows() && !valid.y.empty(), ErrorKind::kInvalidArgument,
            "validation labels do not match rows");
    check_labels(valid.y, "validation");
  }

  std::size_t positives = 0;
  for (int v : y) positives += static_cast<std::size_t>(v);
  require(positives > 0 && positives < n, ErrorKind::kDegenerateLabels,
          "training labels contain a single class");
  require(positives >= 2 && n - positives >= 2, ErrorKind::kInvalidArgument,
          "training needs at least two samples per class");

  GbdtModel model;
  model.learning_rate = cfg.learning_rate;
  model.config = cfg;
  model.feature_names = std::move(feature_names);
  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(prior / (1.0 - prior));

  std::vector<double> margin(n, model.base_score);
  std::vector<double> vmargin(valid.present() ? valid.x->rows() : 0, model.base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  int best_iter = 0;
  double best_loss = 0.0;
  if (valid.present()) {
    best_loss = mean_logloss(vmargin, valid.y);
    model.valid_logloss.push_back(best_loss);
  }

  for (int round = 0; round < cfg.max_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      grad[i] = p - static_cast<double>(y[i]);
      hess[i] = p * (1.0 - p);
    }
    const auto r = static_cast<std::uint64_t>(round);
    const GossSample sample =
        goss_sample(grad, cfg.goss_a, cfg.goss_b, derive_seed(derive_seed(cfg.seed, kGossStream), r));
    const std::vector<double> w = dense_weights(sample, n);
    Tree tree = grow_tree(x, grad, hess, w, cfg,
                          derive_seed(derive_seed(cfg.seed, kFeatureStream), r));

    for (std::size_t i = 0; i < n; ++i) margin[i] += cfg.learning_rate * tree.predict(x.row(i));
    model.train_logloss.push_back(mean_logloss(margin, y));
    model.trees.push_back(std::move(tree));
    const int t = static_cast<int>(model.trees.size());

    if (valid.present()) {
      const Tree& last = model.trees.back();
      for (std::size_t i = 0; i < vmargin.size(); ++i) {
        vmargin[i] += cfg.learning_rate * last.predict(valid.x->row(i));
      }
      const double loss = mean_logloss(vmargin, valid.y);
      model.valid_logloss.push_back(loss);
      if (loss < best_loss) {
        best_loss = loss;
        best_iter = t;
      }
      if (t - best_iter >= cfg.early_stop) break;
    } else {
      best_iter = t;
    }
  }
  model.best_iteration = best_iter;
  return model;
}

}  // namespace physio::gbdt
