#include "physio/gbdt/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "physio/error.hpp"

namespace physio::gbdt {

using nlohmann::json;

namespace {

template <typename T>
T get_field(const json& j, const char* key) {
  require(j.contains(key), ErrorKind::kSchemaMismatch, std::string("model field '") + key + "' missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, std::string("model field '") + key + "': " + e.what());
  }
}

json node_to_json(const Tree& tree, int idx) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(idx)];
  if (n.is_leaf()) return json{{"leaf_value", n.value}, {"cover", n.cover}};
  return json{{"split_feature", n.split_feature},
              {"threshold", n.threshold},
              {"cover", n.cover},
              {"left", node_to_json(tree, n.left)},
              {"right", node_to_json(tree, n.right)}};
}

int node_from_json(const json& j, Tree& tree, std::size_t n_features, int depth) {
  require(j.is_object(), ErrorKind::kSchemaMismatch, "tree node must be an object");
  require(depth < 4096, ErrorKind::kSchemaMismatch, "tree is implausibly deep");
  const int idx = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  TreeNode n;
  // Cover may be absent in hand-written models; the explainer rejects those.
  n.cover = j.contains("cover") ? get_field<double>(j, "cover")
                                : std::numeric_limits<double>::quiet_NaN();
  if (j.contains("leaf_value")) {
    n.value = get_field<double>(j, "leaf_value");
    require(std::isfinite(n.value), ErrorKind::kSchemaMismatch, "leaf value must be finite");
  } else {
    n.split_feature = get_field<int>(j, "split_feature");
    require(n.split_feature >= 0 && static_cast<std::size_t>(n.split_feature) < n_features,
            ErrorKind::kSchemaMismatch, "split_feature out of range");
    n.threshold = get_field<double>(j, "threshold");
    require(j.contains("left") && j.contains("right"), ErrorKind::kSchemaMismatch,
            "internal node needs left and right children");
    n.left = node_from_json(j.at("left"), tree, n_features, depth + 1);
    n.right = node_from_json(j.at("right"), tree, n_features, depth + 1);
  }
  tree.nodes[static_cast<std::size_t>(idx)] = n;
  return idx;
}

}  // namespace

json config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},   {"feature_fraction", c.feature_fraction},
              {"num_leaves", c.num_leaves},         {"min_data_in_leaf", c.min_data_in_leaf},
              {"max_depth", c.max_depth},           {"goss_a", c.goss_a},
              {"goss_b", c.goss_b},                 {"lambda_l2", c.lambda_l2},
              {"min_sum_hessian", c.min_sum_hessian}, {"max_rounds", c.max_rounds},
              {"early_stop", c.early_stop},         {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j, const TrainConfig& base) {
  require(j.is_object(), ErrorKind::kConfig, "training config must be an object");
  TrainConfig c = base;
  static const std::set<std::string> known = {
      "learning_rate", "feature_fraction", "num_leaves", "min_data_in_leaf",
      "max_depth",     "goss_a",           "goss_b",     "lambda_l2",
      "min_sum_hessian", "max_rounds",     "early_stop", "seed"};
  for (const auto& [key, value] : j.items()) {
    require(known.count(key) > 0, ErrorKind::kConfig, "unknown training config key '" + key + "'");
  }
  try {
    auto opt = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    opt("learning_rate", c.learning_rate);
    opt("feature_fraction", c.feature_fraction);
    opt("num_leaves", c.num_leaves);
    opt("min_data_in_leaf", c.min_data_in_leaf);
    opt("max_depth", c.max_depth);
    opt("goss_a", c.goss_a);
    opt("goss_b", c.goss_b);
    opt("lambda_l2", c.lambda_l2);
    opt("min_sum_hessian", c.min_sum_hessian);
    opt("max_rounds", c.max_rounds);
    opt("early_stop", c.early_stop);
    opt("seed", c.seed);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("training config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kConfig, e.what());
  }
  return c;
}

json model_to_json(const GbdtModel& m) {
  json trees = json::array();
  for (const Tree& t : m.trees) trees.push_back(node_to_json(t, 0));
  return json{{"format", kModelFormat},
              {"version", kModelVersion},
              {"objective", "binary_logloss"},
              {"learning_rate", m.learning_rate},
              {"base_score", m.base_score},
              {"best_iteration", m.best_iteration},
              {"feature_names", m.feature_names},
              {"config", config_to_json(m.config)},
              {"trees", trees}};
}

GbdtModel model_from_json(const json& j) {
  require(j.is_object(), ErrorKind::kSchemaMismatch, "model document must be an object");
  require(get_field<std::string>(j, "format") == kModelFormat, ErrorKind::kSchemaMismatch,
          "not a physio-gbdt model document");
  require(get_field<int>(j, "version") == kModelVersion, ErrorKind::kSchemaMismatch,
          "unsupported model version");
  GbdtModel m;
  m.learning_rate = get_field<double>(j, "learning_rate");
  m.base_score = get_field<double>(j, "base_score");
  m.best_iteration = get_field<int>(j, "best_iteration");
  m.feature_names = get_field<std::vector<std::string>>(j, "feature_names");
  require(std::isfinite(m.learning_rate) && std::isfinite(m.base_score),
          ErrorKind::kSchemaMismatch, "learning_rate and base_score must be finite");
  if (j.contains("config")) {
    try {
      m.config = config_from_json(j.at("config"));
    } catch (const Error& e) {
      fail(ErrorKind::kSchemaMismatch, e.what());
    }
  }
  const json& trees = j.contains("trees") ? j.at("trees") : json::array();
  require(trees.is_array(), ErrorKind::kSchemaMismatch, "trees must be an array");
  for (const json& t : trees) {
    Tree tree;
    node_from_json(t, tree, m.feature_names.size(), 0);
    m.trees.push_back(std::move(tree));
  }
  require(m.best_iteration >= 0 && static_cast<std::size_t>(m.best_iteration) <= m.trees.size(),
          ErrorKind::kSchemaMismatch, "best_iteration exceeds the tree count");
  return m;
}

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << model_to_json(model).dump(1) << '\n';
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

GbdtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace physio::gbdt
