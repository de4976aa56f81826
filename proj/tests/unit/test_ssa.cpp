#include <cmath>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "physio/error.hpp"
#include "physio/ssa/ssa.hpp"
#include "test_util.hpp"

using namespace physio;
using namespace physio::ssa;
using physio::testing::gaussian_noise;
using physio::testing::rel_l2;

namespace {

std::vector<double> sum_components(const SsaDecomposition& d) {
  std::vector<double> s(d.components.front().size(), 0.0);
  for (const auto& c : d.components) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += c[i];
  }
  return s;
}

double energy_of(const TimeSeries& ts) {
  double e = 0.0;
  for (double v : ts.values()) e += v * v;
  return e;
}

}  // namespace

TEST_CASE("embed") {
  auto y = embed(TimeSeries({1, 2, 3, 4}), 2);
  REQUIRE(y.rows() == 2);
  REQUIRE(y.cols() == 3);
  CHECK(y(0, 0) == 1);
  CHECK(y(1, 0) == 2);
  CHECK(y(0, 1) == 2);
  CHECK(y(1, 1) == 3);
  CHECK(y(0, 2) == 3);
  CHECK(y(1, 2) == 4);

  TimeSeries x(gaussian_noise(9, 1));
  auto full = embed(x, 9);
  REQUIRE(full.cols() == 1);
  for (int i = 0; i < 9; ++i) CHECK(full(i, 0) == x[static_cast<std::size_t>(i)]);

  auto h = embed(TimeSeries(gaussian_noise(40, 2)), 7);
  for (Eigen::Index i = 1; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j + 1 < h.cols(); ++j) CHECK(h(i, j) == h(i - 1, j + 1));
  }

  CHECK_THROWS_AS(embed(x, 1), Error);
  CHECK_THROWS_AS(embed(x, 10), Error);
}

TEST_CASE("diagonal_average") {
  TimeSeries x(gaussian_noise(50, 3));
  CHECK(diagonal_average(embed(x, 8)) == x);

  Eigen::MatrixXd one(1, 1);
  one(0, 0) = 4.5;
  CHECK(diagonal_average(one).vec() == std::vector<double>{4.5});

  // Brute-force oracle: scan every anti-diagonal explicitly.
  Rng rng(7);
  Eigen::MatrixXd m(3, 4);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) m(i, j) = uniform(rng, -5.0, 5.0);
  auto got = diagonal_average(m);
  REQUIRE(got.size() == 6);
  for (int n = 0; n < 6; ++n) {
    double s = 0.0;
    int cnt = 0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i + j == n) {
          s += m(i, j);
          ++cnt;
        }
      }
    }
    CHECK(got[static_cast<std::size_t>(n)] == doctest::Approx(s / cnt).epsilon(1e-14));
  }
}

TEST_CASE("decompose") {
  SUBCASE("constant signal is rank one") {
    TimeSeries c(std::vector<double>(500, 2.0));
    auto d = decompose(c, 12);
    CHECK(d.rank == 1);
    REQUIRE(d.components.size() == 1);
    CHECK(physio::testing::max_abs_diff(d.components[0].vec(), c.vec()) < 1e-8);
  }
  SUBCASE("components sum to the input") {
    TimeSeries x(gaussian_noise(700, 4));
    auto d = decompose(x, 12);
    CHECK(d.rank == 12);
    CHECK(rel_l2(sum_components(d), x.vec()) < 1e-8);
  }
  SUBCASE("a sinusoid lives in two components") {
    TimeSeries s(physio::testing::sine(2048, 1.0 / 37.0, 3.0, 0.4));
    auto d = decompose(s, 12);
    double total = 0.0;
    for (double sv : d.singular_values) total += sv * sv;
    const double top2 = d.singular_values[0] * d.singular_values[0] +
                        d.singular_values[1] * d.singular_values[1];
    CHECK(top2 / total > 0.999);
  }
  SUBCASE("singular values descending, energy ordering") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      // Random AR(1) paths: a decaying spectrum rather than a flat one.
      auto x = gaussian_noise(1024, 100 + seed);
      for (std::size_t i = 1; i < x.size(); ++i) x[i] += 0.9 * x[i - 1];
      auto d = decompose(TimeSeries(x), 12);
      CHECK(std::is_sorted(d.singular_values.rbegin(), d.singular_values.rend()));
      for (double sv : d.singular_values) CHECK(sv >= 0.0);
      CHECK(energy_of(d.components.front()) >= energy_of(d.components.back()));
    }
  }
  SUBCASE("identity for every window length 2..32") {
    TimeSeries x(gaussian_noise(400, 5));
    for (int l = 2; l <= 32; ++l) {
      auto d = decompose(x, l);
      std::set<int> all;
      for (int k = 1; k <= static_cast<int>(d.components.size()); ++k) all.insert(k);
      CHECK(rel_l2(reconstruct_selected(d, all).vec(), x.vec()) < 1e-8);
    }
  }
}

TEST_CASE("hard_threshold_rank") {
  CHECK(hard_threshold_rank(std::vector<double>(12, 0.0), 12, 7669) == 0);

  std::vector<double> sv(12, 0.01);
  sv[0] = 100.0;
  // Oracle: omega(beta) * median evaluated directly.
  const double beta = 12.0 / 7669.0;
  const double tau = (0.56 * beta * beta * beta - 0.95 * beta * beta + 1.82 * beta + 1.43) * 0.01;
  CHECK(tau == doctest::Approx(0.01432).epsilon(1e-3));
  CHECK(hard_threshold_rank(sv, 12, 7669) == 1);

  SUBCASE("scale invariance") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> s(12);
      for (double& v : s) v = std::exp(uniform(rng, -4.0, 4.0));
      std::sort(s.rbegin(), s.rend());
      const int base = hard_threshold_rank(s, 12, 1000);
      for (double c : {1e-3, 0.5, 7.0, 1e4}) {
        std::vector<double> scaled(s);
        for (double& v : scaled) v *= c;
        CHECK(hard_threshold_rank(scaled, 12, 1000) == base);
      }
    }
  }
}

TEST_CASE("reconstruct_selected") {
  TimeSeries x(gaussian_noise(300, 6));
  auto d = decompose(x, 12);
  std::set<int> all;
  for (int k = 1; k <= d.rank; ++k) all.insert(k);
  CHECK(rel_l2(reconstruct_selected(d, all).vec(), x.vec()) < 1e-8);
  const auto empty = reconstruct_selected(d, {});
  for (double v : empty.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(reconstruct_selected(d, {0}), Error);
  CHECK_THROWS_AS(reconstruct_selected(d, {13}), Error);

  SUBCASE("PPG-like signal from its first four components") {
    const std::size_t n = 7680;
    std::vector<double> ppg(n);
    auto noise = gaussian_noise(n, 8, 0.02);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / 128.0;
      const double beat = 2.0 * std::numbers::pi * 1.2 * t;
      ppg[i] = std::sin(beat) + 0.45 * std::sin(2.0 * beat + 0.8) + 0.15 * std::sin(3.0 * beat + 1.9) +
               0.3 * std::sin(2.0 * std::numbers::pi * 0.25 * t) + noise[i];
    }
    TimeSeries ts(ppg);
    auto dp = decompose(ts, 12);
    CHECK(rel_l2(reconstruct_selected(dp, {1, 2, 3, 4}).vec(), ppg) < 0.05);
  }
}
