#include "physio/shap/treeshap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <string>

#include "physio/error.hpp"

namespace physio::shap {

using gbdt::GbdtModel;
using gbdt::Tree;
using gbdt::TreeNode;

namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

using Path = std::vector<PathElement>;

const TreeNode& node_at(const Tree& t, int i) { return t.nodes[static_cast<std::size_t>(i)]; }

void extend_path(Path& path, int depth, double zero, double one, int feature) {
  path.resize(static_cast<std::size_t>(depth) + 1);
  path[static_cast<std::size_t>(depth)] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
  const double d1 = depth + 1;
  for (int i = depth - 1; i >= 0; --i) {
    auto& cur = path[static_cast<std::size_t>(i)];
    path[static_cast<std::size_t>(i) + 1].pweight += one * cur.pweight * (i + 1) / d1;
    cur.pweight = zero * cur.pweight * (depth - i) / d1;
  }
}

void unwind_path(Path& path, int depth, int index) {
  const double one = path[static_cast<std::size_t>(index)].one_fraction;
  const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
  double next_one = path[static_cast<std::size_t>(depth)].pweight;
  const double d1 = depth + 1;
  for (int i = depth - 1; i >= 0; --i) {
    auto& cur = path[static_cast<std::size_t>(i)];
    if (one != 0.0) {
      const double tmp = cur.pweight;
      cur.pweight = next_one * d1 / ((i + 1) * one);
      next_one = tmp - cur.pweight * zero * (depth - i) / d1;
    } else {
      cur.pweight = cur.pweight * d1 / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    auto& dst = path[static_cast<std::size_t>(i)];
    const auto& src = path[static_cast<std::size_t>(i) + 1];
    dst.feature = src.feature;
    dst.zero_fraction = src.zero_fraction;
    dst.one_fraction = src.one_fraction;
  }
  path.resize(static_cast<std::size_t>(depth));
}

// Total permutation weight if the element at `index` were removed from the path.
double unwound_path_sum(const Path& path, int depth, int index) {
  const double one = path[static_cast<std::size_t>(index)].one_fraction;
  const double zero = path[static_cast<std::size_t>(index)].zero_fraction;
  double next_one = path[static_cast<std::size_t>(depth)].pweight;
  const double d1 = depth + 1;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    const double pw = path[static_cast<std::size_t>(i)].pweight;
    if (one != 0.0) {
      const double tmp = next_one * d1 / ((i + 1) * one);
      total += tmp;
      next_one = pw - tmp * zero * (depth - i) / d1;
    } else if (zero != 0.0) {
      total += pw / zero / ((depth - i) / d1);
    }
  }
  return total;
}

// Conditioning: 0 = none, +1 = feature `cond_feature` fixed present, -1 = fixed absent.
struct Walk {
  const Tree& tree;
  std::span<const double> x;
  std::vector<double>& phi;
  double scale;
  int condition;
  int cond_feature;
};

void recurse(const Walk& w, int node, Path path, int depth, double parent_zero, double parent_one,
             int parent_feature, double cond_fraction) {
  if (cond_fraction == 0.0) return;
  if (w.condition == 0 || w.cond_feature != parent_feature) {
    extend_path(path, depth, parent_zero, parent_one, parent_feature);
  }
  const TreeNode& n = node_at(w.tree, node);

  if (n.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double weight = unwound_path_sum(path, depth, i);
      const PathElement& el = path[static_cast<std::size_t>(i)];
      w.phi[static_cast<std::size_t>(el.feature)] +=
          weight * (el.one_fraction - el.zero_fraction) * n.value * w.scale * cond_fraction;
    }
    return;
  }

  const bool go_left = w.x[static_cast<std::size_t>(n.split_feature)] < n.threshold;
  const int hot = go_left ? n.left : n.right;
  const int cold = go_left ? n.right : n.left;
  const double hot_zero = node_at(w.tree, hot).cover / n.cover;
  const double cold_zero = node_at(w.tree, cold).cover / n.cover;
  double incoming_zero = 1.0;
  double incoming_one = 1.0;

  int index = 0;
  while (index <= depth && path[static_cast<std::size_t>(index)].feature != n.split_feature) ++index;
  if (index <= depth) {
    incoming_zero = path[static_cast<std::size_t>(index)].zero_fraction;
    incoming_one = path[static_cast<std::size_t>(index)].one_fraction;
    unwind_path(path, depth, index);
    --depth;
  }

  double hot_cond = cond_fraction;
  double cold_cond = cond_fraction;
  if (w.condition > 0 && n.split_feature == w.cond_feature) {
    cold_cond = 0.0;
    --depth;
  } else if (w.condition < 0 && n.split_feature == w.cond_feature) {
    hot_cond *= hot_zero;
    cold_cond *= cold_zero;
    --depth;
  }
  recurse(w, hot, path, depth + 1, hot_zero * incoming_zero, incoming_one, n.split_feature,
          hot_cond);
  recurse(w, cold, std::move(path), depth + 1, cold_zero * incoming_zero, 0.0, n.split_feature,
          cold_cond);
}

void tree_shap(const Tree& tree, std::span<const double> x, std::vector<double>& phi, double scale,
               int condition = 0, int cond_feature = -1) {
  const Walk w{tree, x, phi, scale, condition, cond_feature};
  Path path;
  path.reserve(32);
  recurse(w, 0, std::move(path), 0, 1.0, 1.0, -1, 1.0);
}

double expected_value(const Tree& t, int i) {
  const TreeNode& n = node_at(t, i);
  if (n.is_leaf()) return n.value;
  return (node_at(t, n.left).cover * expected_value(t, n.left) +
          node_at(t, n.right).cover * expected_value(t, n.right)) /
         n.cover;
}

double tree_value(const Tree& t, int i, std::span<const double> x, std::span<const char> present) {
  const TreeNode& n = node_at(t, i);
  if (n.is_leaf()) return n.value;
  const auto f = static_cast<std::size_t>(n.split_feature);
  if (present[f]) return tree_value(t, x[f] < n.threshold ? n.left : n.right, x, present);
  return (node_at(t, n.left).cover * tree_value(t, n.left, x, present) +
          node_at(t, n.right).cover * tree_value(t, n.right, x, present)) /
         n.cover;
}

void check_input(const GbdtModel& model, std::span<const double> x) {
  require(x.size() == model.num_features(), ErrorKind::kInvalidArgument,
          "feature vector has " + std::to_string(x.size()) + " entries, model expects " +
              std::to_string(model.num_features()));
}

std::vector<int> features_used(const Tree& t) {
  std::vector<int> f;
  for (const TreeNode& n : t.nodes) {
    if (!n.is_leaf()) f.push_back(n.split_feature);
  }
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

template <typename Out, typename Fn>
std::vector<Out> per_row(const gbdt::Matrix& x, Fn&& fn) {
  std::vector<Out> out(x.rows());
  std::vector<std::exception_ptr> errors(x.rows());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t r = 0; r < x.rows(); ++r) {
    try {
      out[r] = fn(x.row(r));
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

void check_explainable(const GbdtModel& model) {
  for (const Tree& t : model.active_trees()) {
    require(!t.nodes.empty(), ErrorKind::kModelIncompatible, "model contains an empty tree");
    for (const TreeNode& n : t.nodes) {
      require(std::isfinite(n.cover) && n.cover > 0.0, ErrorKind::kModelIncompatible,
              "model nodes lack cover statistics");
      if (!n.is_leaf()) {
        require(n.split_feature >= 0 &&
                    static_cast<std::size_t>(n.split_feature) < model.num_features(),
                ErrorKind::kModelIncompatible, "split feature out of range");
      }
    }
  }
}

double expected_margin(const GbdtModel& model) {
  check_explainable(model);
  double s = 0.0;
  for (const Tree& t : model.active_trees()) s += expected_value(t, 0);
  return model.base_score + model.learning_rate * s;
}

ShapExplanation shap_values(const GbdtModel& model, std::span<const double> x) {
  check_input(model, x);
  ShapExplanation e;
  e.base_value = expected_margin(model);
  e.values.assign(model.num_features(), 0.0);
  for (const Tree& t : model.active_trees()) tree_shap(t, x, e.values, model.learning_rate);
  return e;
}

std::vector<ShapExplanation> shap_values(const GbdtModel& model, const gbdt::Matrix& x) {
  check_explainable(model);
  return per_row<ShapExplanation>(x, [&](std::span<const double> r) { return shap_values(model, r); });
}

double path_dependent_value(const GbdtModel& model, std::span<const double> x,
                            std::span<const char> present) {
  check_input(model, x);
  require(present.size() == x.size(), ErrorKind::kInvalidArgument, "coalition mask size mismatch");
  double s = 0.0;
  for (const Tree& t : model.active_trees()) s += tree_value(t, 0, x, present);
  return model.base_score + model.learning_rate * s;
}

ShapExplanation brute_force_shapley(const GbdtModel& model, std::span<const double> x) {
  check_input(model, x);
  check_explainable(model);
  const std::size_t n = x.size();
  require(n <= 20, ErrorKind::kCapacity, "brute-force Shapley supports at most 20 features");
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> v(subsets);
  std::vector<char> mask(n);
  for (std::size_t s = 0; s < subsets; ++s) {
    for (std::size_t i = 0; i < n; ++i) mask[i] = static_cast<char>((s >> i) & 1U);
    v[s] = path_dependent_value(model, x, mask);
  }
  // weight[k] = k! (n-k-1)! / n!
  std::vector<double> weight(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double w = 1.0 / static_cast<double>(n);
    for (std::size_t j = 1; j <= k; ++j) {
      w *= static_cast<double>(j) / static_cast<double>(n - j);
    }
    weight[k] = w;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double binom = 1.0;
    for (std::size_t j = 1; j <= k; ++j) {
      binom *= static_cast<double>(n - 1 - k + j) / static_cast<double>(j);
    }
    total += binom * weight[k];
  }
  require(n == 0 || std::abs(total - 1.0) < 1e-9, ErrorKind::kNumericalFailure,
          "Shapley weights do not sum to one");

  ShapExplanation e;
  e.base_value = v[0];
  e.values.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
    e.values[i] = phi;
  }
  return e;
}

InteractionMatrix shap_interactions(const GbdtModel& model, std::span<const double> x) {
  check_input(model, x);
  check_explainable(model);
  const std::size_t n = x.size();
  InteractionMatrix m;
  m.n = n;
  m.data.assign(n * n, 0.0);
  std::vector<double> phi(n, 0.0);
  std::vector<double> on(n);
  std::vector<double> off(n);
  for (const Tree& t : model.active_trees()) {
    tree_shap(t, x, phi, model.learning_rate);
    // Conditioning on a feature the tree never splits on changes nothing.
    for (int i : features_used(t)) {
      std::fill(on.begin(), on.end(), 0.0);
      std::fill(off.begin(), off.end(), 0.0);
      tree_shap(t, x, on, model.learning_rate, 1, i);
      tree_shap(t, x, off, model.learning_rate, -1, i);
      const auto row = static_cast<std::size_t>(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j != row) m(row, j) += (on[j] - off[j]) / 2.0;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double off_diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) off_diag += m(i, j);
    }
    m(i, i) = phi[i] - off_diag;
  }
  return m;
}

std::vector<InteractionMatrix> shap_interactions(const GbdtModel& model, const gbdt::Matrix& x) {
  check_explainable(model);
  return per_row<InteractionMatrix>(
      x, [&](std::span<const double> r) { return shap_interactions(model, r); });
}

ImportanceRanking global_importance(std::span<const ShapExplanation> explanations,
                                    std::span<const std::string> feature_names) {
  require(!explanations.empty(), ErrorKind::kInvalidArgument, "no explanations to rank");
  const std::size_t n = feature_names.size();
  std::vector<double> score(n, 0.0);
  for (const ShapExplanation& e : explanations) {
    require(e.values.size() == n, ErrorKind::kInvalidArgument,
            "explanation dimension does not match the feature names");
    for (std::size_t j = 0; j < n; ++j) score[j] += std::abs(e.values[j]);
  }
  ImportanceRanking r(n);
  for (std::size_t j = 0; j < n; ++j) {
    r[j] = {feature_names[j], j, score[j] / static_cast<double>(explanations.size())};
  }
  std::stable_sort(r.begin(), r.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
    return a.mean_abs_shap > b.mean_abs_shap;
  });
  return r;
}

SelectionResult select_features(const ImportanceRanking& ranking, const SubsetEvaluator& evaluate) {
  require(!ranking.empty(), ErrorKind::kInvalidArgument, "ranking is empty");
  std::vector<char> seen(ranking.size(), 0);
  for (const ImportanceEntry& e : ranking) {
    require(e.index < ranking.size() && !seen[e.index], ErrorKind::kInvalidArgument,
            "ranking must cover every feature exactly once");
    seen[e.index] = 1;
  }
  SelectionResult out;
  std::vector<std::size_t> subset;
  for (std::size_t k = 1; k <= ranking.size(); ++k) {
    subset.push_back(ranking[k - 1].index);
    std::vector<std::size_t> sorted = subset;
    std::sort(sorted.begin(), sorted.end());
    try {
      out.curve.push_back({k, evaluate(sorted)});
    } catch (const Error& e) {
      throw Error(e.kind(), "feature selection at k=" + std::to_string(k) + ": " + e.what());
    } catch (const std::exception& e) {
      fail(ErrorKind::kNumericalFailure,
           "feature selection at k=" + std::to_string(k) + ": " + e.what());
    }
  }
  std::size_t best_acc = 0;
  std::size_t best_f1 = 0;
  for (std::size_t i = 1; i < out.curve.size(); ++i) {
    if (out.curve[i].score.accuracy > out.curve[best_acc].score.accuracy) best_acc = i;
    if (out.curve[i].score.f1 > out.curve[best_f1].score.f1) best_f1 = i;
  }
  out.best_k_accuracy = out.curve[best_acc].k;
  out.best_k_f1 = out.curve[best_f1].k;
  for (std::size_t i = 0; i < out.best_k_accuracy; ++i) out.best_subset_accuracy.push_back(ranking[i].feature);
  for (std::size_t i = 0; i < out.best_k_f1; ++i) out.best_subset_f1.push_back(ranking[i].feature);
  return out;
}

}  // namespace physio::shap
