#include <cmath>

#include "doctest.h"
#include "physio/error.hpp"
#include "physio/features/entropy_reference.hpp"
#include "physio/features/feature_vector.hpp"
#include "test_util.hpp"

using namespace physio;
using namespace physio::features;
using physio::testing::gaussian_noise;
using physio::testing::white_noise;

namespace {

EntropyConfig cfg_with(double r, ToleranceMode mode = ToleranceMode::std_scaled) {
  EntropyConfig c;
  c.tolerance = r;
  c.tolerance_mode = mode;
  return c;
}

ComponentMap seventeen_components(std::uint64_t seed, std::size_t n = 600) {
  ComponentMap m;
  const auto schema = FeatureSchema::paper_default();
  for (const auto& g : schema.groups()) {
    for (int k = 0; k < g.components; ++k) {
      m[g.tag].emplace_back(gaussian_noise(n, ++seed));
    }
  }
  return m;
}

}  // namespace

TEST_CASE("sample_entropy") {
  const EntropyConfig cfg;
  CHECK(sample_entropy(TimeSeries(std::vector<double>(100, 1.5)), cfg) == 0.0);

  SUBCASE("white noise equals the brute-force reference exactly") {
    const auto c = cfg_with(0.2);
    TimeSeries x(white_noise(200, 42));
    CHECK(sample_entropy(x, c) == reference::sample_entropy(x.values(), c));
  }
  SUBCASE("noise is less regular than a sine of equal variance") {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto noise = gaussian_noise(1000, seed);
      auto s = physio::testing::sine(1000, 1.0 / 25.0, std::sqrt(2.0), 0.1 * static_cast<double>(seed));
      wins += sample_entropy(TimeSeries(noise), cfg) > sample_entropy(TimeSeries(s), cfg);
    }
    CHECK(wins == 20);
  }
  SUBCASE("no (m+1) matches hits the finite cap") {
    // Strictly increasing by large steps: nothing matches with a tiny absolute r.
    std::vector<double> x(50);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i * i);
    const auto c = cfg_with(0.5, ToleranceMode::absolute);
    const double v = sample_entropy(TimeSeries(x), c);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(std::log(1.0) + std::log(48.0)));
    CHECK(v == reference::sample_entropy(x, c));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(sample_entropy(TimeSeries({1.0, 2.0, 3.0}), cfg), Error);
    CHECK_THROWS_AS(sample_entropy(TimeSeries(white_noise(50, 1)), cfg_with(0.0)), Error);
  }
}

TEST_CASE("fuzzy_entropy") {
  const EntropyConfig cfg;
  CHECK(fuzzy_entropy(TimeSeries(std::vector<double>(100, -3.0)), cfg) == 0.0);

  SUBCASE("noise matches the reference") {
    TimeSeries x(white_noise(200, 43));
    CHECK(std::abs(fuzzy_entropy(x, cfg) - reference::fuzzy_entropy(x.values(), cfg)) < 1e-12);
    const auto abs_cfg = cfg_with(0.15, ToleranceMode::absolute);
    CHECK(std::abs(fuzzy_entropy(x, abs_cfg) - reference::fuzzy_entropy(x.values(), abs_cfg)) <
          1e-12);
  }
  SUBCASE("other embedding dimensions and powers use the same definition") {
    TimeSeries x(gaussian_noise(300, 44));
    for (int m : {1, 2, 3, 4}) {
      for (int n : {1, 2, 3}) {
        EntropyConfig c;
        c.embedding_dim = m;
        c.fuzzy_power = n;
        CHECK(std::abs(fuzzy_entropy(x, c) - reference::fuzzy_entropy(x.values(), c)) < 1e-12);
        CHECK(sample_entropy(x, c) == reference::sample_entropy(x.values(), c));
      }
    }
  }
  SUBCASE("more additive noise never lowers FuzzyEn") {
    const auto base = physio::testing::sine(800, 1.0 / 40.0);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto noise = gaussian_noise(800, 1000 + seed);
      double prev = -1.0;
      for (double amp : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8}) {
        std::vector<double> x(base);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += amp * noise[i];
        const double fe = fuzzy_entropy(TimeSeries(x), cfg);
        CHECK(fe >= prev);
        prev = fe;
      }
    }
  }
}

TEST_CASE("energy") {
  CHECK(energy(TimeSeries(std::vector<double>(10, 0.0))) == 0.0);
  CHECK(energy(TimeSeries({1.0, 2.0, 3.0})) == doctest::Approx(14.0 / 3.0));
  TimeSeries x(gaussian_noise(100, 5));
  std::vector<double> scaled(x.vec());
  for (double& v : scaled) v *= 3.0;
  CHECK(energy(TimeSeries(scaled)) == doctest::Approx(9.0 * energy(x)).epsilon(1e-14));
  CHECK_THROWS_AS(energy(std::span<const double>{}), Error);
}

TEST_CASE("entropy invariants") {
  const EntropyConfig cfg;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto x = gaussian_noise(150 + seed % 50, 300 + seed);
    // Mild autocorrelation so both entropies are well inside their range.
    for (std::size_t i = 1; i < x.size(); ++i) x[i] += 0.5 * x[i - 1];
    TimeSeries ts(x);
    const double se = sample_entropy(ts, cfg);
    const double fe = fuzzy_entropy(ts, cfg);
    CHECK(se >= 0.0);
    CHECK(fe >= 0.0);
    if (seed % 10 != 0) continue;

    std::vector<double> shifted(x), stretched(x);
    for (double& v : shifted) v += 12.5;
    for (double& v : stretched) v *= 4.0;
    CHECK(std::abs(sample_entropy(TimeSeries(shifted), cfg) - se) < 1e-10);
    CHECK(std::abs(fuzzy_entropy(TimeSeries(shifted), cfg) - fe) < 1e-10);
    CHECK(std::abs(sample_entropy(TimeSeries(stretched), cfg) - se) < 1e-10);
    CHECK(std::abs(fuzzy_entropy(TimeSeries(stretched), cfg) - fe) < 1e-10);
  }
}

TEST_CASE("extract_feature_vector") {
  const EntropyConfig cfg;
  const auto comps = seventeen_components(1);
  const auto fv = extract_feature_vector(comps, cfg);
  REQUIRE(fv.values.size() == 51);
  REQUIRE(fv.names.size() == 51);
  for (double v : fv.values) CHECK(std::isfinite(v));
  CHECK(fv.names[0] == "hEOG1_SE");
  CHECK(fv.names[1] == "hEOG1_FE");
  CHECK(fv.names[2] == "hEOG1_En");
  CHECK(fv.names[6] == "vEOG1_SE");
  CHECK(fv.names[24] == "GSR1_SE");
  CHECK(fv.names[29] == "GSR2_En");
  CHECK(fv.names[50] == "Temp1_En");
  CHECK(extract_feature_vector(comps, cfg) == fv);

  auto missing = comps;
  missing.erase("Temp");
  try {
    extract_feature_vector(missing, cfg);
    FAIL("expected schema mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSchemaMismatch);
    CHECK(std::string(e.what()).find("Temp") != std::string::npos);
  }
  auto extra = comps;
  extra["PPG"].pop_back();
  CHECK_THROWS_AS(extract_feature_vector(extra, cfg), Error);
}
