#include "physio/features/entropy.hpp"

#include <cfloat>
#include <cmath>
#include <string>

#include "physio/error.hpp"
#include "physio/util/stats.hpp"

namespace physio::features {

void EntropyConfig::validate() const {
  require(embedding_dim >= 1, ErrorKind::kConfig, "embedding dimension m must be >= 1");
  require(tolerance > 0.0 && std::isfinite(tolerance), ErrorKind::kConfig,
          "tolerance r must be positive");
  require(fuzzy_power >= 1, ErrorKind::kConfig, "fuzzy power n must be >= 1");
}

double effective_tolerance(std::span<const double> x, const EntropyConfig& cfg) {
  if (cfg.tolerance_mode == ToleranceMode::absolute) return cfg.tolerance;
  return cfg.tolerance * population_std(x);
}

namespace {

void check_inputs(std::span<const double> x, const EntropyConfig& cfg) {
  require(cfg.embedding_dim >= 1, ErrorKind::kInvalidArgument, "embedding dimension must be >= 1");
  require(cfg.fuzzy_power >= 1, ErrorKind::kInvalidArgument, "fuzzy power must be >= 1");
  require(cfg.tolerance > 0.0, ErrorKind::kInvalidArgument, "tolerance must be positive");
  require(x.size() > static_cast<std::size_t>(cfg.embedding_dim) + 1, ErrorKind::kInvalidArgument,
          "series of length " + std::to_string(x.size()) + " too short for m = " +
              std::to_string(cfg.embedding_dim));
}

bool is_constant(std::span<const double> x) {
  for (double v : x) {
    if (v != x[0]) return false;
  }
  return true;
}

}  // namespace

double sample_entropy(const TimeSeries& ts, const EntropyConfig& cfg) {
  auto x = ts.values();
  check_inputs(x, cfg);
  // A constant series matches everywhere at every length.
  if (is_constant(x)) return 0.0;
  const double r = effective_tolerance(x, cfg);
  require(r > 0.0, ErrorKind::kInvalidArgument, "effective tolerance is zero");
  const auto counts = kernel::sample_entropy_counts(x, cfg.embedding_dim, r);
  const double templates = static_cast<double>(x.size() - static_cast<std::size_t>(cfg.embedding_dim));
  if (counts.a == 0) {
    const double b_ordered = std::max(1.0, 2.0 * static_cast<double>(counts.b));
    return std::log(b_ordered) + std::log(templates);
  }
  return -std::log(static_cast<double>(counts.a) / static_cast<double>(counts.b));
}

double fuzzy_entropy(const TimeSeries& ts, const EntropyConfig& cfg) {
  auto x = ts.values();
  check_inputs(x, cfg);
  if (is_constant(x)) return 0.0;
  double scale = 1.0 / cfg.tolerance;
  if (cfg.tolerance_mode == ToleranceMode::std_scaled) {
    const double sd = population_std(x);
    require(sd > 0.0, ErrorKind::kInvalidArgument, "effective tolerance is zero");
    scale /= std::pow(sd, cfg.fuzzy_power);
  }
  const auto sums = kernel::fuzzy_entropy_sums(x, cfg.embedding_dim, cfg.fuzzy_power, scale);
  // Ordered-pair averages over the N - m shared templates.
  const double nt = static_cast<double>(x.size() - static_cast<std::size_t>(cfg.embedding_dim));
  const double norm = 2.0 / (nt * (nt - 1.0));
  return std::log(std::max(sums.phi_m * norm, DBL_MIN)) -
         std::log(std::max(sums.phi_m1 * norm, DBL_MIN));
}

double energy(std::span<const double> x) {
  require(!x.empty(), ErrorKind::kInvalidArgument, "energy of an empty series");
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

double energy(const TimeSeries& ts) { return energy(ts.values()); }

namespace kernel {

MatchCounts sample_entropy_counts(std::span<const double> x, int m, double r) {
  const auto nt = static_cast<std::int64_t>(x.size()) - m;
  const double* d = x.data();
  std::int64_t a = 0;
  std::int64_t b = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : a, b)
  for (std::int64_t i = 0; i < nt; ++i) {
    for (std::int64_t j = i + 1; j < nt; ++j) {
      int k = 0;
      while (k < m && std::abs(d[i + k] - d[j + k]) < r) ++k;
      if (k < m) continue;
      ++b;
      if (std::abs(d[i + m] - d[j + m]) < r) ++a;
    }
  }
  return {a, b};
}

}  // namespace kernel

}  // namespace physio::features
