#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "physio/gbdt/goss.hpp"
#include "physio/gbdt/search.hpp"
#include "physio/gbdt/serialize.hpp"
#include "physio/gbdt/train.hpp"
#include "physio/gbdt/tree_builder.hpp"
#include "test_util.hpp"

using namespace physio;
using namespace physio::gbdt;
using physio::testing::error_kind;

namespace {

struct Dataset {
  Matrix x;
  std::vector<int> y;
  std::vector<int> groups;
};

// Labels drawn from a logistic model on the first two features.
Dataset logistic_data(std::size_t n, std::size_t f, std::uint64_t seed, int subjects = 10) {
  Rng rng(seed);
  Dataset d{Matrix(n, f), std::vector<int>(n), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) d.x(i, j) = normal01(rng);
    const double m = 1.5 * d.x(i, 0) - 1.0 * d.x(i, 1) + 0.3;
    d.y[i] = uniform01(rng) < sigmoid(m) ? 1 : 0;
    d.groups[i] = static_cast<int>(i % static_cast<std::size_t>(subjects));
  }
  return d;
}

double accuracy(const GbdtModel& m, const Matrix& x, const std::vector<int>& y) {
  const auto pred = predict(m, x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i].label() == y[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

void check_structure(const Tree& t, const TrainConfig& cfg) {
  CHECK(t.leaf_count() <= cfg.num_leaves);
  CHECK(t.depth() <= cfg.max_depth);
  for (const TreeNode& n : t.nodes) {
    if (n.is_leaf()) {
      CHECK(std::isfinite(n.value));
      continue;
    }
    const double sum = t.nodes[static_cast<std::size_t>(n.left)].cover +
                       t.nodes[static_cast<std::size_t>(n.right)].cover;
    CHECK(std::abs(n.cover - sum) <= 1e-9);
  }
}

TrainConfig no_sampling(double lr = 0.1) {
  TrainConfig c;
  c.learning_rate = lr;
  c.goss_a = 1.0;
  c.goss_b = 0.0;
  c.feature_fraction = 1.0;
  return c;
}

}  // namespace

TEST_CASE("goss_sample") {
  SUBCASE("a = 1 keeps everything at weight 1") {
    const std::vector<double> g = physio::testing::gaussian_noise(50, 3);
    const GossSample s = goss_sample(g, 1.0, 0.0, 9);
    REQUIRE(s.indices.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(s.indices[i] == i);
      CHECK(s.weights[i] == 1.0);
    }
  }
  SUBCASE("small-gradient rows are amplified by (1-a)/b") {
    const std::vector<double> g = physio::testing::gaussian_noise(100, 4);
    const GossSample s = goss_sample(g, 0.2, 0.1, 11);
    CHECK(s.indices.size() == 30);
    std::vector<double> mags;
    for (double v : g) mags.push_back(std::abs(v));
    std::vector<double> sorted = mags;
    std::sort(sorted.rbegin(), sorted.rend());
    int ones = 0;
    int amplified = 0;
    for (std::size_t k = 0; k < s.indices.size(); ++k) {
      if (s.weights[k] == 1.0) {
        ++ones;
        CHECK(mags[s.indices[k]] >= sorted[19]);
      } else {
        ++amplified;
        CHECK(s.weights[k] == doctest::Approx(8.0).epsilon(1e-15));
        CHECK(mags[s.indices[k]] <= sorted[19]);
      }
    }
    CHECK(ones == 20);
    CHECK(amplified == 10);
    CHECK(std::is_sorted(s.indices.begin(), s.indices.end()));
  }
  SUBCASE("deterministic per seed") {
    const std::vector<double> g = physio::testing::gaussian_noise(80, 5);
    CHECK(goss_sample(g, 0.2, 0.1, 1).indices == goss_sample(g, 0.2, 0.1, 1).indices);
    CHECK(goss_sample(g, 0.2, 0.1, 1).indices != goss_sample(g, 0.2, 0.1, 2).indices);
  }
  SUBCASE("weighted gradient sum is unbiased over seeds") {
    Rng rng(77);
    std::vector<double> g(200);
    for (double& v : g) v = uniform(rng, -0.3, 1.0);
    const double exact = std::accumulate(g.begin(), g.end(), 0.0);
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const GossSample s = goss_sample(g, 0.2, 0.1, seed);
      double sum = 0.0;
      for (std::size_t k = 0; k < s.indices.size(); ++k) sum += s.weights[k] * g[s.indices[k]];
      mean += sum / 1000.0;
    }
    CHECK(std::abs(mean - exact) / std::abs(exact) < 0.02);
  }
  SUBCASE("invalid rates") {
    const std::vector<double> g(10, 1.0);
    CHECK(error_kind([&] { goss_sample(g, 0.0, 0.1, 1); }) == ErrorKind::kInvalidArgument);
    CHECK(error_kind([&] { goss_sample(g, 0.5, 0.6, 1); }) == ErrorKind::kInvalidArgument);
    CHECK(error_kind([&] { goss_sample(g, 1.2, 0.0, 1); }) == ErrorKind::kInvalidArgument);
    CHECK(error_kind([&] { goss_sample(g, 0.3, 0.0, 1); }) == ErrorKind::kInvalidArgument);
  }
}

TEST_CASE("grow_tree") {
  SUBCASE("no positive gain leaves a single leaf") {
    const Dataset d = logistic_data(60, 3, 1);
    const std::vector<double> grad(60, -0.5);
    const std::vector<double> hess(60, 0.25);
    const std::vector<double> w(60, 1.0);
    const Tree t = grow_tree(d.x, grad, hess, w, no_sampling(), 0);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].value == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(t.nodes[0].cover == 60.0);
  }

  SUBCASE("1-D separable data splits between the closest opposite labels") {
    Rng rng(5);
    const std::size_t n = 40;
    Matrix x(n, 1);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x(i, 0) = uniform(rng, -3.0, 3.0);
      y[i] = x(i, 0) >= 0.0 ? 1 : 0;
    }
    const double prior = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> grad(n), hess(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = prior - y[i];
      hess[i] = prior * (1.0 - prior);
    }
    TrainConfig cfg = no_sampling();
    cfg.num_leaves = 2;
    cfg.min_data_in_leaf = 1;
    const Tree t = grow_tree(x, grad, hess, w, cfg, 0);
    REQUIRE(t.nodes.size() == 3);

    // Hand enumeration of every split position on sorted values.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x(a, 0) < x(b, 0); });
    const double G = std::accumulate(grad.begin(), grad.end(), 0.0);
    const double H = std::accumulate(hess.begin(), hess.end(), 0.0);
    double best_gain = -1.0, best_thr = 0.0, gl = 0.0, hl = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      gl += grad[order[k]];
      hl += hess[order[k]];
      const double gain = gl * gl / hl + (G - gl) * (G - gl) / (H - hl) - G * G / H;
      if (gain > best_gain) {
        best_gain = gain;
        best_thr = 0.5 * (x(order[k], 0) + x(order[k + 1], 0));
      }
    }
    double max_neg = -1e9, min_pos = 1e9;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] == 0) max_neg = std::max(max_neg, x(i, 0));
      if (y[i] == 1) min_pos = std::min(min_pos, x(i, 0));
    }
    CHECK(t.nodes[0].split_feature == 0);
    CHECK(t.nodes[0].threshold == best_thr);
    CHECK(t.nodes[0].threshold > max_neg);
    CHECK(t.nodes[0].threshold < min_pos);
  }

  SUBCASE("num_leaves = 1 keeps the root leaf") {
    const Dataset d = logistic_data(100, 4, 2);
    std::vector<double> grad(100), hess(100, 0.25), w(100, 1.0);
    for (std::size_t i = 0; i < 100; ++i) grad[i] = 0.5 - d.y[i];
    TrainConfig cfg = no_sampling();
    cfg.num_leaves = 1;
    const Tree t = grow_tree(d.x, grad, hess, w, cfg, 0);
    CHECK(t.nodes.size() == 1);
  }

  SUBCASE("zero-weight rows are out of bag") {
    const Dataset d = logistic_data(100, 2, 3);
    std::vector<double> grad(100), hess(100, 0.25), w(100, 0.0);
    for (std::size_t i = 0; i < 100; ++i) grad[i] = 0.5 - d.y[i];
    for (std::size_t i = 0; i < 100; i += 2) w[i] = 1.5;
    const Tree t = grow_tree(d.x, grad, hess, w, no_sampling(), 0);
    CHECK(t.nodes[0].cover == doctest::Approx(75.0));
  }

  SUBCASE("errors") {
    const Matrix empty;
    const std::vector<double> none;
    CHECK(error_kind([&] { grow_tree(empty, none, none, none, no_sampling(), 0); }) ==
          ErrorKind::kInvalidArgument);
    const Dataset d = logistic_data(10, 2, 3);
    const std::vector<double> g(10, 0.1), w(10, -1.0);
    CHECK(error_kind([&] { grow_tree(d.x, g, g, w, no_sampling(), 0); }) ==
          ErrorKind::kInvalidArgument);
  }

  SUBCASE("feature subset size") {
    CHECK(feature_subset(51, 1.0, 3).size() == 51);
    CHECK(feature_subset(51, 0.5, 3).size() == 26);
    CHECK(feature_subset(51, 1e-6, 3).size() == 1);
    const auto s = feature_subset(20, 0.3, 8);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(s == feature_subset(20, 0.3, 8));
  }
}

TEST_CASE("train") {
  SUBCASE("AND of two binary features is learned exactly") {
    Rng rng(21);
    Matrix x(200, 2);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
      x(i, 0) = static_cast<double>(uniform_int(rng, 0, 1));
      x(i, 1) = static_cast<double>(uniform_int(rng, 0, 1));
      y[i] = x(i, 0) == 1.0 && x(i, 1) == 1.0 ? 1 : 0;
    }
    TrainConfig cfg;
    cfg.max_rounds = 50;
    const GbdtModel m = train(x, y, {}, cfg);
    CHECK(m.trees.size() <= 50);
    CHECK(accuracy(m, x, y) == 1.0);
    // Exhaustive truth table.
    for (int a = 0; a <= 1; ++a) {
      for (int b = 0; b <= 1; ++b) {
        const std::vector<double> v{double(a), double(b)};
        CHECK(predict(m, v).label() == (a == 1 && b == 1 ? 1 : 0));
      }
    }
  }

  SUBCASE("single-class labels are degenerate") {
    const Dataset d = logistic_data(50, 3, 4);
    const std::vector<int> ones(50, 1);
    CHECK(error_kind([&] { train(d.x, ones, {}, TrainConfig{}); }) ==
          ErrorKind::kDegenerateLabels);
    std::vector<int> lone(50, 1);
    lone[3] = 0;
    CHECK(error_kind([&] { train(d.x, lone, {}, TrainConfig{}); }) ==
          ErrorKind::kInvalidArgument);
  }

  SUBCASE("near-constant target drives predictions toward the majority") {
    const Dataset d = logistic_data(200, 3, 6);
    std::vector<int> y(200, 1);
    y[10] = y[77] = y[150] = 0;
    TrainConfig cfg = no_sampling(0.1);
    cfg.max_rounds = 100;
    const GbdtModel m = train(d.x, y, {}, cfg);
    for (std::size_t t = 1; t < m.train_logloss.size(); ++t) {
      CHECK(m.train_logloss[t] <= m.train_logloss[t - 1] + 1e-15);
    }
    std::size_t high = 0;
    for (std::size_t i = 0; i < 200; ++i) high += predict(m, d.x.row(i)).probability > 0.99 ? 1 : 0;
    CHECK(high >= 197);
  }

  SUBCASE("early stopping contract") {
    // Labels unrelated to features: validation loss bottoms out early.
    Dataset d = logistic_data(300, 5, 8);
    Rng rng(2);
    for (int& v : d.y) v = uniform01(rng) < 0.5 ? 1 : 0;
    const Dataset v = [&] {
      Dataset t = logistic_data(120, 5, 9);
      for (int& l : t.y) l = uniform01(rng) < 0.5 ? 1 : 0;
      return t;
    }();
    TrainConfig cfg;
    const GbdtModel m = train(d.x, d.y, {&v.x, v.y}, cfg);
    REQUIRE(m.trees.size() < 500);
    CHECK(m.best_iteration < static_cast<int>(m.trees.size()));
    CHECK(static_cast<int>(m.trees.size()) - m.best_iteration == cfg.early_stop);
    CHECK(m.valid_logloss.size() == m.trees.size() + 1);
    const auto it = std::min_element(m.valid_logloss.begin(), m.valid_logloss.end());
    CHECK(it - m.valid_logloss.begin() == m.best_iteration);
  }

  SUBCASE("no validation set uses every tree") {
    const Dataset d = logistic_data(100, 3, 10);
    TrainConfig cfg;
    cfg.max_rounds = 17;
    const GbdtModel m = train(d.x, d.y, {}, cfg);
    CHECK(m.trees.size() == 17);
    CHECK(m.best_iteration == 17);
  }
}

TEST_CASE("train properties") {
  SUBCASE("training logloss is non-increasing without sampling") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Dataset d = logistic_data(250, 6, 100 + seed);
      TrainConfig cfg = no_sampling(0.1);
      cfg.max_rounds = 60;
      cfg.min_data_in_leaf = 5;
      const GbdtModel m = train(d.x, d.y, {}, cfg);
      REQUIRE(m.train_logloss.size() == 60);
      for (std::size_t t = 1; t < m.train_logloss.size(); ++t) {
        CHECK(m.train_logloss[t] <= m.train_logloss[t - 1] + 1e-12);
      }
    }
  }

  SUBCASE("structure and cover bookkeeping across configurations") {
    const Dataset d = logistic_data(400, 8, 55);
    for (int leaves : {2, 5, 11, 20}) {
      for (int depth : {1, 2, 5}) {
        TrainConfig cfg;
        cfg.num_leaves = leaves;
        cfg.max_depth = depth;
        cfg.min_data_in_leaf = 10;
        cfg.feature_fraction = 0.6;
        cfg.max_rounds = 15;
        const GbdtModel m = train(d.x, d.y, {}, cfg);
        for (const Tree& t : m.trees) check_structure(t, cfg);
      }
    }
  }

  SUBCASE("bit-deterministic without sampling") {
    const Dataset d = logistic_data(200, 5, 66);
    TrainConfig cfg = no_sampling();
    cfg.max_rounds = 30;
    const GbdtModel a = train(d.x, d.y, {}, cfg);
    const GbdtModel b = train(d.x, d.y, {}, cfg);
    CHECK(model_to_json(a).dump() == model_to_json(b).dump());
  }

  SUBCASE("seeded sampling is reproducible") {
    const Dataset d = logistic_data(200, 5, 67);
    TrainConfig cfg;
    cfg.feature_fraction = 0.5;
    cfg.max_rounds = 20;
    cfg.seed = 4;
    CHECK(model_to_json(train(d.x, d.y, {}, cfg)).dump() ==
          model_to_json(train(d.x, d.y, {}, cfg)).dump());
  }
}

TEST_CASE("predict") {
  GbdtModel m;
  m.feature_names = {"a", "b"};
  m.base_score = 0.4;
  m.learning_rate = 0.5;
  const std::vector<double> x{-1.0, 2.0};
  CHECK(predict(m, x).probability == doctest::Approx(sigmoid(0.4)));
  CHECK(sigmoid(0.0) == 0.5);

  Tree t;
  t.nodes.resize(3);
  t.nodes[0] = {0, 0.0, 1, 2, 0.0, 10.0};
  t.nodes[1] = {-1, 0.0, -1, -1, -2.0, 4.0};
  t.nodes[2] = {-1, 0.0, -1, -1, 3.0, 6.0};
  m.trees.push_back(t);
  m.best_iteration = 1;
  CHECK(predict(m, x).margin == doctest::Approx(0.4 + 0.5 * -2.0));
  const std::vector<double> x2{0.0, 2.0};
  CHECK(predict(m, x2).margin == doctest::Approx(0.4 + 0.5 * 3.0));
  m.best_iteration = 0;
  CHECK(predict(m, x2).margin == 0.4);

  const std::vector<double> bad{1.0};
  CHECK(error_kind([&] { predict(m, bad); }) == ErrorKind::kInvalidArgument);
}

TEST_CASE("random_search") {
  const Dataset d = logistic_data(300, 4, 31, 12);
  TrainConfig base;
  base.max_rounds = 60;
  base.early_stop = 10;

  SUBCASE("one iteration returns the sampled config") {
    const SearchSpace space;
    const SearchResult r = random_search(d.x, d.y, d.groups, space, 1, 5, base);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.best == sample_config(space, base, derive_seed(5, 1000)));
    CHECK(r.best.learning_rate >= 0.01);
    CHECK(r.best.learning_rate <= 0.5);
  }

  SUBCASE("deterministic given the seed") {
    const SearchSpace space;
    const SearchResult a = random_search(d.x, d.y, d.groups, space, 6, 9, base);
    const SearchResult b = random_search(d.x, d.y, d.groups, space, 6, 9, base);
    CHECK(a.best == b.best);
    CHECK(a.best_logloss == b.best_logloss);
  }

  SUBCASE("sampled configs stay in range") {
    const SearchSpace space;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const TrainConfig c = sample_config(space, base, s);
      CHECK(c.learning_rate > 0.01);
      CHECK(c.learning_rate <= 0.5);
      CHECK(c.feature_fraction > 0.0);
      CHECK(c.feature_fraction <= 1.0);
      CHECK((c.num_leaves >= 5 && c.num_leaves <= 20));
      CHECK((c.min_data_in_leaf >= 10 && c.min_data_in_leaf <= 100));
      CHECK((c.max_depth >= 5 && c.max_depth <= 20));
    }
  }

  SUBCASE("planted optimum matches the exhaustive grid") {
    Dataset p = logistic_data(600, 4, 32, 20);
    Rng flip(1);
    for (std::size_t i = 0; i < 600; ++i) {
      p.y[i] = (p.x(i, 0) + 0.3 * p.x(i, 1) > 0.0) != (uniform01(flip) < 0.1) ? 1 : 0;
    }
    SearchSpace space;
    space.learning_rate.choices = {0.01, 0.05, 0.2, 0.5};
    space.feature_fraction = {1.0, 1.0, {}};
    space.num_leaves = {6, 6};
    space.min_data_in_leaf = {10, 10};
    space.max_depth = {6, 6};
    TrainConfig fixed = base;
    fixed.goss_a = 1.0;
    fixed.goss_b = 0.0;
    fixed.max_rounds = 25;
    const SearchResult r = random_search(p.x, p.y, p.groups, space, 30, 3, fixed);

    const InnerSplit split = inner_subject_split(p.groups, p.y, 0.1, derive_seed(3, 0));
    std::set<int> held;
    for (std::size_t i : split.valid_rows) held.insert(p.groups[i]);
    CHECK(held.size() == 2);
    const Matrix xt = p.x.select_rows(split.train_rows);
    const Matrix xv = p.x.select_rows(split.valid_rows);
    std::vector<int> yt, yv;
    for (auto i : split.train_rows) yt.push_back(p.y[i]);
    for (auto i : split.valid_rows) yv.push_back(p.y[i]);
    double best_lr = 0.0, best_loss = 1e300;
    for (double lr : space.learning_rate.choices) {
      TrainConfig c = fixed;
      c.learning_rate = lr;
      c.num_leaves = 6;
      c.min_data_in_leaf = 10;
      c.max_depth = 6;
      const GbdtModel m = train(xt, yt, {&xv, yv}, c);
      const double loss = m.valid_logloss[static_cast<std::size_t>(m.best_iteration)];
      if (loss < best_loss) {
        best_loss = loss;
        best_lr = lr;
      }
    }
    CHECK(r.best.learning_rate == best_lr);
    CHECK(r.best_logloss == best_loss);
    std::set<double> losses;
    for (const SearchTrial& t : r.trials) losses.insert(t.valid_logloss);
    CHECK(losses.size() == 4);
  }

  SUBCASE("infeasible space") {
    SearchSpace space;
    space.num_leaves = {10, 5};
    CHECK(error_kind([&] { random_search(d.x, d.y, d.groups, space, 3, 1, base); }) ==
          ErrorKind::kInvalidArgument);
    SearchSpace frac;
    frac.feature_fraction = {0.5, 1.5, {}};
    CHECK(error_kind([&] { random_search(d.x, d.y, d.groups, frac, 3, 1, base); }) ==
          ErrorKind::kInvalidArgument);
    CHECK(error_kind([&] { random_search(d.x, d.y, d.groups, SearchSpace{}, 0, 1, base); }) ==
          ErrorKind::kInvalidArgument);
  }

  SUBCASE("inner split holds out whole subjects") {
    const InnerSplit s = inner_subject_split(d.groups, d.y, 0.1, 17);
    std::set<int> tr, va;
    for (auto i : s.train_rows) tr.insert(d.groups[i]);
    for (auto i : s.valid_rows) va.insert(d.groups[i]);
    for (int g : va) CHECK(tr.count(g) == 0);
    CHECK(tr.size() + va.size() == 12);
    CHECK(s.train_rows.size() + s.valid_rows.size() == 300);
  }
}

TEST_CASE("model serialization") {
  const Dataset d = logistic_data(200, 4, 12);
  TrainConfig cfg;
  cfg.max_rounds = 20;
  const GbdtModel m = train(d.x, d.y, {}, cfg, {"w", "x", "y", "z"});
  const GbdtModel back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  CHECK(back.feature_names == m.feature_names);
  CHECK(back.best_iteration == m.best_iteration);
  CHECK(back.config == m.config);
  for (std::size_t i = 0; i < d.x.rows(); ++i) {
    CHECK(predict(back, d.x.row(i)).margin == predict(m, d.x.row(i)).margin);
  }
  CHECK(model_to_json(back).dump() == model_to_json(m).dump());

  auto j = model_to_json(m);
  j["version"] = 99;
  CHECK(error_kind([&] { model_from_json(j); }) == ErrorKind::kSchemaMismatch);
  CHECK(error_kind([&] { config_from_json({{"num_leavs", 3}}); }) == ErrorKind::kConfig);
  CHECK(config_from_json({{"num_leaves", 7}}).num_leaves == 7);
}
