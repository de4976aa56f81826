#include "physio/gbdt/tree_builder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "physio/error.hpp"
#include "physio/util/rng.hpp"

namespace physio::gbdt {

namespace {

using RowList = std::vector<std::uint32_t>;

struct SplitCandidate {
  bool valid = false;
  double gain = 0.0;
  std::size_t feature = 0;  // position in the active feature subset
  double threshold = 0.0;
};

struct Stats {
  double g = 0.0;
  double h = 0.0;
  double w = 0.0;
};

struct LeafState {
  int node = 0;
  int depth = 0;
  Stats stats;
  std::vector<RowList> sorted;  // per active feature: in-bag rows ordered by value
  SplitCandidate best;
};

struct Context {
  const Matrix& x;
  std::span<const double> grad;
  std::span<const double> hess;
  std::span<const double> weights;
  const TrainConfig& cfg;
  const std::vector<std::size_t>& active;
};

double score(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0.0 ? g * g / denom : 0.0;
}

double leaf_value(const Stats& s, double lambda) {
  const double denom = s.h + lambda;
  return denom > 0.0 ? -s.g / denom : 0.0;
}

SplitCandidate best_split_for_feature(const Context& ctx, const RowList& rows, std::size_t fpos,
                                      const Stats& total) {
  SplitCandidate best;
  const std::size_t n = rows.size();
  const auto min_data = static_cast<std::size_t>(ctx.cfg.min_data_in_leaf);
  if (n < 2 * min_data) return best;
  const std::size_t f = ctx.active[fpos];
  const double lambda = ctx.cfg.lambda_l2;
  const double parent = score(total.g, total.h, lambda);
  // Gains within rounding noise of zero do not count as positive.
  const double tol = 1e-12 * (1.0 + std::abs(parent));

  Stats left;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::uint32_t r = rows[k];
    const double w = ctx.weights[r];
    left.g += w * ctx.grad[r];
    left.h += w * ctx.hess[r];
    left.w += w;
    const std::size_t n_left = k + 1;
    if (n_left < min_data) continue;
    if (n - n_left < min_data) break;
    const double lo = ctx.x(r, f);
    const double hi = ctx.x(rows[k + 1], f);
    if (!(lo < hi)) continue;
    const double gr = total.g - left.g;
    const double hr = total.h - left.h;
    if (left.h < ctx.cfg.min_sum_hessian || hr < ctx.cfg.min_sum_hessian) continue;
    const double gain = score(left.g, left.h, lambda) + score(gr, hr, lambda) - parent;
    if (gain > tol && (!best.valid || gain > best.gain)) {
      double thr = lo + (hi - lo) * 0.5;
      if (!(lo < thr)) thr = hi;
      best = {true, gain, fpos, thr};
    }
  }
  return best;
}

void find_best_split(const Context& ctx, LeafState& leaf) {
  leaf.best = {};
  if (leaf.depth >= ctx.cfg.max_depth) return;
  const std::size_t nf = ctx.active.size();
  std::vector<SplitCandidate> per_feature(nf);
  const std::size_t work = nf * (leaf.sorted.empty() ? 0 : leaf.sorted.front().size());
#pragma omp parallel for schedule(static) if (work > 200000)
  for (std::size_t p = 0; p < nf; ++p) {
    per_feature[p] = best_split_for_feature(ctx, leaf.sorted[p], p, leaf.stats);
  }
  for (const SplitCandidate& c : per_feature) {
    if (c.valid && (!leaf.best.valid || c.gain > leaf.best.gain)) leaf.best = c;
  }
}

}  // namespace

std::vector<std::size_t> feature_subset(std::size_t n_features, double fraction, std::uint64_t seed) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::kInvalidArgument,
          "feature_fraction must lie in (0, 1]");
  std::vector<std::size_t> all(n_features);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_features))));
  if (k >= n_features) return all;
  Rng rng(seed);
  shuffle(rng, all);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

Tree grow_tree(const Matrix& features, std::span<const double> grad, std::span<const double> hess,
               std::span<const double> weights, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = features.rows();
  require(n > 0 && features.cols() > 0, ErrorKind::kInvalidArgument, "grow_tree needs data");
  require(grad.size() == n && hess.size() == n && weights.size() == n,
          ErrorKind::kInvalidArgument, "gradient, hessian and weight lengths must match the rows");

  LeafState root;
  RowList in_bag;
  for (std::size_t r = 0; r < n; ++r) {
    require(weights[r] >= 0.0 && std::isfinite(weights[r]), ErrorKind::kInvalidArgument,
            "sample weights must be finite and non-negative");
    if (weights[r] == 0.0) continue;
    in_bag.push_back(static_cast<std::uint32_t>(r));
    root.stats.g += weights[r] * grad[r];
    root.stats.h += weights[r] * hess[r];
    root.stats.w += weights[r];
  }
  require(!in_bag.empty(), ErrorKind::kInvalidArgument, "grow_tree needs a positive-weight row");

  const std::vector<std::size_t> active = feature_subset(features.cols(), cfg.feature_fraction, seed);
  const Context ctx{features, grad, hess, weights, cfg, active};

  root.sorted.resize(active.size());
  for (std::size_t p = 0; p < active.size(); ++p) {
    const std::size_t f = active[p];
    RowList& list = root.sorted[p];
    list = in_bag;
    std::stable_sort(list.begin(), list.end(), [&](std::uint32_t a, std::uint32_t b) {
      return features(a, f) < features(b, f);
    });
  }

  Tree tree;
  tree.nodes.push_back({});
  tree.nodes[0].cover = root.stats.w;
  std::vector<LeafState> leaves;
  leaves.push_back(std::move(root));
  if (cfg.num_leaves > 1) find_best_split(ctx, leaves[0]);

  std::vector<char> goes_left(n, 0);
  while (static_cast<int>(leaves.size()) < cfg.num_leaves) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      const SplitCandidate& c = leaves[i].best;
      if (!c.valid) continue;
      if (pick == leaves.size() || c.gain > leaves[pick].best.gain ||
          (c.gain == leaves[pick].best.gain && leaves[i].node < leaves[pick].node)) {
        pick = i;
      }
    }
    if (pick == leaves.size()) break;

    LeafState parent = std::move(leaves[pick]);
    const std::size_t f = active[parent.best.feature];
    const double thr = parent.best.threshold;

    LeafState left;
    LeafState right;
    left.depth = right.depth = parent.depth + 1;
    const RowList& any = parent.sorted[parent.best.feature];
    for (std::uint32_t r : any) {
      const bool l = features(r, f) < thr;
      goes_left[r] = l ? 1 : 0;
      Stats& s = l ? left.stats : right.stats;
      s.g += weights[r] * grad[r];
      s.h += weights[r] * hess[r];
      s.w += weights[r];
    }
    left.sorted.resize(active.size());
    right.sorted.resize(active.size());
    for (std::size_t p = 0; p < active.size(); ++p) {
      for (std::uint32_t r : parent.sorted[p]) {
        (goes_left[r] ? left.sorted[p] : right.sorted[p]).push_back(r);
      }
      RowList().swap(parent.sorted[p]);
    }

    left.node = static_cast<int>(tree.nodes.size());
    right.node = left.node + 1;
    TreeNode& pn = tree.nodes[static_cast<std::size_t>(parent.node)];
    pn.split_feature = static_cast<int>(f);
    pn.threshold = thr;
    pn.left = left.node;
    pn.right = right.node;
    TreeNode ln;
    ln.cover = left.stats.w;
    TreeNode rn;
    rn.cover = right.stats.w;
    tree.nodes.push_back(ln);
    tree.nodes.push_back(rn);

    find_best_split(ctx, left);
    find_best_split(ctx, right);
    leaves[pick] = std::move(left);
    leaves.push_back(std::move(right));
  }

  for (const LeafState& leaf : leaves) {
    tree.nodes[static_cast<std::size_t>(leaf.node)].value = leaf_value(leaf.stats, cfg.lambda_l2);
  }
  // Internal covers are re-summed from the leaves so parent == left + right exactly.
  for (std::size_t i = tree.nodes.size(); i-- > 0;) {
    TreeNode& nd = tree.nodes[i];
    if (!nd.is_leaf()) {
      nd.cover = tree.nodes[static_cast<std::size_t>(nd.left)].cover +
                 tree.nodes[static_cast<std::size_t>(nd.right)].cover;
    }
  }
  return tree;
}

}  // namespace physio::gbdt
