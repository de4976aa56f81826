#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "physio/gbdt/train.hpp"
#include "physio/shap/treeshap.hpp"
#include "test_util.hpp"

using namespace physio;
using namespace physio::gbdt;
using namespace physio::shap;
using physio::testing::error_kind;

namespace {

// Appends a random subtree and returns its index; covers are additive by construction.
int random_subtree(Tree& t, Rng& rng, std::size_t n_features, int depth) {
  const int idx = static_cast<int>(t.nodes.size());
  t.nodes.push_back({});
  if (depth == 0 || uniform01(rng) < 0.15) {
    t.nodes[static_cast<std::size_t>(idx)].value = normal01(rng);
    t.nodes[static_cast<std::size_t>(idx)].cover = 1.0 + 9.0 * uniform01(rng);
    return idx;
  }
  const int f = static_cast<int>(uniform_int(rng, 0, static_cast<std::int64_t>(n_features) - 1));
  const double thr = normal01(rng);
  const int l = random_subtree(t, rng, n_features, depth - 1);
  const int r = random_subtree(t, rng, n_features, depth - 1);
  TreeNode& n = t.nodes[static_cast<std::size_t>(idx)];
  n.split_feature = f;
  n.threshold = thr;
  n.left = l;
  n.right = r;
  n.cover = t.nodes[static_cast<std::size_t>(l)].cover + t.nodes[static_cast<std::size_t>(r)].cover;
  return idx;
}

GbdtModel random_model(std::size_t n_features, int depth, int n_trees, std::uint64_t seed) {
  Rng rng(seed);
  GbdtModel m;
  m.feature_names = default_feature_names(n_features);
  m.base_score = normal01(rng);
  m.learning_rate = 0.05 + 0.5 * uniform01(rng);
  for (int k = 0; k < n_trees; ++k) {
    Tree t;
    random_subtree(t, rng, n_features, depth);
    m.trees.push_back(std::move(t));
  }
  m.best_iteration = n_trees;
  return m;
}

std::vector<double> random_point(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = normal01(rng);
  return x;
}

Tree stump(int feature, double thr, double left, double right, double cl, double cr) {
  Tree t;
  t.nodes = {{feature, thr, 1, 2, 0.0, cl + cr},
             {-1, 0.0, -1, -1, left, cl},
             {-1, 0.0, -1, -1, right, cr}};
  return t;
}

// Shapley interaction index by enumeration, split evenly between (i,j) and (j,i).
std::vector<double> brute_interactions(const GbdtModel& m, const std::vector<double>& x) {
  const std::size_t n = x.size();
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> v(subsets);
  std::vector<char> mask(n);
  for (std::size_t s = 0; s < subsets; ++s) {
    for (std::size_t i = 0; i < n; ++i) mask[i] = static_cast<char>((s >> i) & 1U);
    v[s] = path_dependent_value(m, x, mask);
  }
  auto fact = [](std::size_t k) {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f;
  };
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::size_t bi = std::size_t{1} << i, bj = std::size_t{1} << j;
      double sum = 0.0;
      for (std::size_t s = 0; s < subsets; ++s) {
        if (s & (bi | bj)) continue;
        const auto k = static_cast<std::size_t>(std::popcount(s));
        const double w = fact(k) * fact(n - k - 2) / (2.0 * fact(n - 1));
        sum += w * (v[s | bi | bj] - v[s | bi] - v[s | bj] + v[s]);
      }
      out[i * n + j] = sum;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("shap_values basics") {
  SUBCASE("single-leaf model") {
    GbdtModel m;
    m.feature_names = {"a", "b", "c"};
    m.base_score = -0.3;
    m.learning_rate = 0.2;
    Tree t;
    t.nodes = {{-1, 0.0, -1, -1, 1.7, 12.0}};
    m.trees = {t};
    m.best_iteration = 1;
    const std::vector<double> x{1.0, 2.0, 3.0};
    const ShapExplanation e = shap_values(m, x);
    for (double v : e.values) CHECK(v == 0.0);
    CHECK(e.base_value == doctest::Approx(-0.3 + 0.2 * 1.7).epsilon(1e-15));
  }

  SUBCASE("local accuracy on a trained model") {
    Rng rng(3);
    Matrix x(200, 6);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
      for (std::size_t j = 0; j < 6; ++j) x(i, j) = normal01(rng);
      y[i] = x(i, 0) * x(i, 1) + 0.5 * x(i, 2) + 0.3 * normal01(rng) > 0 ? 1 : 0;
    }
    TrainConfig cfg;
    cfg.max_rounds = 40;
    const GbdtModel m = train(x, y, {}, cfg);
    const auto all = shap_values(m, x);
    for (std::size_t i = 0; i < 200; ++i) {
      double s = all[i].base_value;
      for (double v : all[i].values) s += v;
      CHECK(std::abs(s - predict(m, x.row(i)).margin) < 1e-6);
    }
  }

  SUBCASE("missing cover is rejected") {
    GbdtModel m = random_model(3, 2, 2, 1);
    m.trees[1].nodes[0].cover = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> x{0.0, 0.0, 0.0};
    CHECK(error_kind([&] { shap_values(m, x); }) == ErrorKind::kModelIncompatible);
    CHECK(error_kind([&] { shap_interactions(m, x); }) == ErrorKind::kModelIncompatible);
    m.trees[1].nodes[0].cover = 0.0;
    CHECK(error_kind([&] { shap_values(m, x); }) == ErrorKind::kModelIncompatible);
  }

  SUBCASE("dimension mismatch") {
    const GbdtModel m = random_model(3, 2, 2, 1);
    const std::vector<double> x{0.0, 0.0};
    CHECK(error_kind([&] { shap_values(m, x); }) == ErrorKind::kInvalidArgument);
  }
}

TEST_CASE("shap_values equal the exhaustive oracle") {
  SUBCASE("5 features, depth 3, 10 trees") {
    const GbdtModel m = random_model(5, 3, 10, 42);
    Rng rng(1);
    for (int s = 0; s < 20; ++s) {
      const auto x = random_point(5, rng);
      const ShapExplanation fast = shap_values(m, x);
      const ShapExplanation slow = brute_force_shapley(m, x);
      CHECK(std::abs(fast.base_value - slow.base_value) < 1e-12);
      for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(fast.values[j] - slow.values[j]) < 1e-8);
    }
  }

  SUBCASE("50 random models") {
    Rng rng(9);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto nf = static_cast<std::size_t>(uniform_int(rng, 1, 12));
      const int depth = static_cast<int>(uniform_int(rng, 1, 4));
      const int trees = static_cast<int>(uniform_int(rng, 1, 20));
      const GbdtModel m = random_model(nf, depth, trees, 500 + seed);
      const auto x = random_point(nf, rng);
      const ShapExplanation fast = shap_values(m, x);
      const ShapExplanation slow = brute_force_shapley(m, x);
      double worst = 0.0;
      for (std::size_t j = 0; j < nf; ++j) worst = std::max(worst, std::abs(fast.values[j] - slow.values[j]));
      CHECK(worst < 1e-8);
      double s = fast.base_value;
      for (double v : fast.values) s += v;
      CHECK(std::abs(s - predict(m, x).margin) < 1e-6);
    }
  }

  SUBCASE("single feature: phi equals margin minus v(empty)") {
    const GbdtModel m = random_model(1, 3, 4, 7);
    const std::vector<double> x{0.4};
    const std::vector<char> none{0};
    const ShapExplanation e = brute_force_shapley(m, x);
    CHECK(e.values[0] == doctest::Approx(predict(m, x).margin - path_dependent_value(m, x, none)).epsilon(1e-14));
  }

  SUBCASE("hand-computed stump") {
    GbdtModel m;
    m.feature_names = {"a", "b"};
    m.base_score = 0.1;
    m.learning_rate = 0.5;
    m.trees = {stump(1, 0.0, -1.0, 3.0, 30.0, 10.0)};
    m.best_iteration = 1;
    const std::vector<double> x{5.0, 1.0};
    // margin = 0.1 + 0.5*3; cover-weighted mean = 0.1 + 0.5*(30*-1 + 10*3)/40 = 0.1
    const ShapExplanation e = brute_force_shapley(m, x);
    CHECK(e.values[1] == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(e.values[0] == 0.0);
    CHECK(e.base_value == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(shap_values(m, x).values[1] == doctest::Approx(1.5).epsilon(1e-14));
  }

  SUBCASE("capacity") {
    const GbdtModel m = random_model(21, 2, 2, 3);
    const std::vector<double> x(21, 0.0);
    CHECK(error_kind([&] { brute_force_shapley(m, x); }) == ErrorKind::kCapacity);
  }
}

TEST_CASE("shap properties") {
  SUBCASE("unused features get exactly zero") {
    GbdtModel m = random_model(4, 3, 6, 11);
    m.feature_names.push_back("unused");
    Rng rng(2);
    for (int s = 0; s < 10; ++s) {
      const auto x = random_point(5, rng);
      CHECK(shap_values(m, x).values[4] == 0.0);
    }
  }

  SUBCASE("consistency when reliance on a feature grows") {
    GbdtModel a;
    a.feature_names = {"a", "b"};
    a.learning_rate = 1.0;
    a.trees = {stump(0, 0.0, -1.0, 1.0, 10.0, 10.0), stump(1, 0.0, -0.5, 0.5, 10.0, 10.0)};
    a.best_iteration = 2;
    GbdtModel b = a;
    b.trees.push_back(stump(0, 0.0, -2.0, 2.0, 10.0, 10.0));
    b.best_iteration = 3;
    const std::vector<double> x{1.0, -1.0};
    CHECK(shap_values(b, x).values[0] >= shap_values(a, x).values[0]);
    CHECK(shap_values(b, x).values[1] == doctest::Approx(shap_values(a, x).values[1]));
  }

  SUBCASE("only active trees are explained") {
    GbdtModel m = random_model(3, 3, 8, 5);
    m.best_iteration = 3;
    Rng rng(4);
    const auto x = random_point(3, rng);
    const ShapExplanation e = shap_values(m, x);
    double s = e.base_value;
    for (double v : e.values) s += v;
    CHECK(std::abs(s - predict(m, x).margin) < 1e-9);
  }
}

TEST_CASE("shap_interactions") {
  SUBCASE("symmetry, completeness and the exhaustive oracle") {
    Rng rng(6);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto nf = static_cast<std::size_t>(uniform_int(rng, 2, 7));
      const GbdtModel m = random_model(nf, static_cast<int>(uniform_int(rng, 1, 4)),
                                       static_cast<int>(uniform_int(rng, 1, 10)), 900 + seed);
      const auto x = random_point(nf, rng);
      const InteractionMatrix im = shap_interactions(m, x);
      const ShapExplanation e = shap_values(m, x);
      const auto oracle = brute_interactions(m, x);
      for (std::size_t i = 0; i < nf; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < nf; ++j) {
          row += im(i, j);
          CHECK(std::abs(im(i, j) - im(j, i)) < 1e-9);
          if (i != j) CHECK(std::abs(im(i, j) - oracle[i * nf + j]) < 1e-8);
        }
        CHECK(std::abs(row - e.values[i]) < 1e-6);
      }
    }
  }

  SUBCASE("additive model has no interactions") {
    GbdtModel m;
    m.feature_names = {"a", "b", "c"};
    m.learning_rate = 0.3;
    m.trees = {stump(0, 0.5, -1.0, 2.0, 7.0, 3.0), stump(2, -0.2, 0.4, -0.9, 5.0, 9.0),
               stump(0, -1.0, 0.1, 0.3, 2.0, 8.0)};
    m.best_iteration = 3;
    Rng rng(8);
    for (int s = 0; s < 10; ++s) {
      const auto x = random_point(3, rng);
      const InteractionMatrix im = shap_interactions(m, x);
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          if (i != j) CHECK(std::abs(im(i, j)) < 1e-8);
        }
      }
    }
  }

  SUBCASE("batch matches per-sample") {
    const GbdtModel m = random_model(4, 3, 5, 77);
    Rng rng(3);
    Matrix x(12, 4);
    for (std::size_t i = 0; i < 12; ++i) {
      for (std::size_t j = 0; j < 4; ++j) x(i, j) = normal01(rng);
    }
    const auto batch = shap_interactions(m, x);
    for (std::size_t i = 0; i < 12; ++i) CHECK(batch[i].data == shap_interactions(m, x.row(i)).data);
  }
}

TEST_CASE("global_importance") {
  const std::vector<std::string> names{"a", "b", "c"};
  SUBCASE("all zero keeps canonical order") {
    const std::vector<ShapExplanation> e(4, ShapExplanation{{0.0, 0.0, 0.0}, 0.0});
    const ImportanceRanking r = global_importance(e, names);
    CHECK(r[0].feature == "a");
    CHECK(r[1].feature == "b");
    CHECK(r[2].feature == "c");
    for (const auto& x : r) CHECK(x.mean_abs_shap == 0.0);
  }
  SUBCASE("single sample ranks by magnitude") {
    const std::vector<ShapExplanation> e{{{0.1, -0.7, 0.3}, 0.0}};
    const ImportanceRanking r = global_importance(e, names);
    CHECK(r[0].feature == "b");
    CHECK(r[1].feature == "c");
    CHECK(r[2].feature == "a");
    CHECK(r[0].mean_abs_shap == 0.7);
  }
  SUBCASE("a feature with ten times the effect ranks first") {
    GbdtModel m;
    m.feature_names = {"weak", "strong"};
    m.learning_rate = 1.0;
    m.trees = {stump(0, 0.0, -0.1, 0.1, 10.0, 10.0), stump(1, 0.0, -1.0, 1.0, 10.0, 10.0)};
    m.best_iteration = 2;
    Rng rng(5);
    Matrix x(100, 2);
    for (std::size_t i = 0; i < 100; ++i) {
      x(i, 0) = normal01(rng);
      x(i, 1) = normal01(rng);
    }
    const auto ex = shap_values(m, x);
    const ImportanceRanking r = global_importance(ex, m.feature_names);
    CHECK(r[0].feature == "strong");
    CHECK(r[0].mean_abs_shap == doctest::Approx(10.0 * r[1].mean_abs_shap));
  }
  SUBCASE("errors") {
    CHECK(error_kind([&] { global_importance({}, names); }) == ErrorKind::kInvalidArgument);
    const std::vector<ShapExplanation> bad{{{1.0}, 0.0}};
    CHECK(error_kind([&] { global_importance(bad, names); }) == ErrorKind::kInvalidArgument);
  }
}

TEST_CASE("select_features") {
  const std::vector<ShapExplanation> e{{{0.2, 0.9, 0.1, 0.5}, 0.0}};
  const std::vector<std::string> names{"a", "b", "c", "d"};
  const ImportanceRanking r = global_importance(e, names);

  SUBCASE("nested prefixes and argmax with smallest k on ties") {
    std::vector<std::vector<std::size_t>> seen;
    const SelectionResult s = select_features(r, [&](const std::vector<std::size_t>& f) {
      seen.push_back(f);
      const double k = static_cast<double>(f.size());
      return SubsetScore{k == 2 || k == 3 ? 0.8 : 0.5, 0.01, k >= 3 ? 0.9 : 0.6, 0.02};
    });
    REQUIRE(seen.size() == 4);
    CHECK(seen[0] == std::vector<std::size_t>{1});
    CHECK(seen[1] == std::vector<std::size_t>{1, 3});
    CHECK(seen[2] == std::vector<std::size_t>{0, 1, 3});
    CHECK(seen[3] == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(s.best_k_accuracy == 2);
    CHECK(s.best_k_f1 == 3);
    CHECK(s.best_subset_accuracy == std::vector<std::string>{"b", "d"});
  }

  SUBCASE("k = F evaluates the full feature set") {
    const SubsetScore full{0.61, 0.03, 0.74, 0.02};
    const SelectionResult s = select_features(r, [&](const std::vector<std::size_t>& f) {
      return f.size() == 4 ? full : SubsetScore{};
    });
    CHECK(s.curve.back().k == 4);
    CHECK(s.curve.back().score.accuracy == full.accuracy);
    CHECK(s.curve.back().score.f1 == full.f1);
  }

  SUBCASE("callback errors carry k") {
    try {
      select_features(r, [](const std::vector<std::size_t>& f) -> SubsetScore {
        if (f.size() == 3) fail(ErrorKind::kDegenerateLabels, "boom");
        return {};
      });
      FAIL("expected an error");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::kDegenerateLabels);
      CHECK(std::string(err.what()).find("k=3") != std::string::npos);
    }
  }
}
