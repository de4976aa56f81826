#include "physio/features/entropy_reference.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <vector>

#include "physio/error.hpp"
#include "physio/util/stats.hpp"

namespace physio::features::reference {

namespace {

using Template = std::vector<double>;

std::vector<Template> templates(std::span<const double> x, std::size_t len, std::size_t count,
                                bool remove_mean) {
  std::vector<Template> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Template t(x.begin() + static_cast<std::ptrdiff_t>(i),
               x.begin() + static_cast<std::ptrdiff_t>(i + len));
    if (remove_mean) {
      double mu = 0.0;
      for (double v : t) mu += v;
      mu /= static_cast<double>(len);
      for (double& v : t) v -= mu;
    }
    out.push_back(std::move(t));
  }
  return out;
}

double chebyshev(const Template& a, const Template& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

void check(std::span<const double> x, const EntropyConfig& cfg) {
  require(cfg.embedding_dim >= 1 && cfg.tolerance > 0.0 && cfg.fuzzy_power >= 1,
          ErrorKind::kInvalidArgument, "invalid entropy parameters");
  require(x.size() > static_cast<std::size_t>(cfg.embedding_dim) + 1, ErrorKind::kInvalidArgument,
          "series too short");
}

}  // namespace

double sample_entropy(std::span<const double> x, const EntropyConfig& cfg) {
  check(x, cfg);
  const auto m = static_cast<std::size_t>(cfg.embedding_dim);
  const std::size_t count = x.size() - m;
  const double r = cfg.tolerance_mode == ToleranceMode::absolute
                       ? cfg.tolerance
                       : cfg.tolerance * population_std(x);
  if (r == 0.0) return 0.0;  // constant series
  const auto tm = templates(x, m, count, false);
  const auto tm1 = templates(x, m + 1, count, false);
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < count; ++j) {
      if (i == j) continue;
      if (chebyshev(tm[i], tm[j]) < r) b += 1.0;
      if (chebyshev(tm1[i], tm1[j]) < r) a += 1.0;
    }
  }
  if (a == 0.0) return std::log(std::max(b, 1.0)) + std::log(static_cast<double>(count));
  return -std::log(a / b);
}

double fuzzy_entropy(std::span<const double> x, const EntropyConfig& cfg) {
  check(x, cfg);
  const auto m = static_cast<std::size_t>(cfg.embedding_dim);
  const std::size_t count = x.size() - m;
  double r = cfg.tolerance;
  if (cfg.tolerance_mode == ToleranceMode::std_scaled) {
    const double sd = population_std(x);
    if (sd == 0.0) return 0.0;
    r *= std::pow(sd, cfg.fuzzy_power);
  }
  auto phi = [&](std::size_t len) {
    const auto t = templates(x, len, count, true);
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < count; ++j) {
        if (i == j) continue;
        row += std::exp(-std::pow(chebyshev(t[i], t[j]), cfg.fuzzy_power) / r);
      }
      total += row / static_cast<double>(count - 1);
    }
    return total / static_cast<double>(count);
  };
  return std::log(std::max(phi(m), DBL_MIN)) - std::log(std::max(phi(m + 1), DBL_MIN));
}

}  // namespace physio::features::reference
