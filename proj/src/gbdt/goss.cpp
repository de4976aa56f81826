#include "physio/gbdt/goss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "physio/error.hpp"
#include "physio/util/rng.hpp"

namespace physio::gbdt {

namespace {

std::size_t ceil_count(double rate, std::size_t n) {
  // Guard against 0.1 * 30 landing a hair above 3.
  const double c = std::ceil(rate * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, c)));
}

}  // namespace

GossSample goss_sample(std::span<const double> gradients, double a, double b, std::uint64_t seed) {
  require(a > 0.0 && a <= 1.0, ErrorKind::kInvalidArgument, "goss a must lie in (0, 1]");
  require(b >= 0.0 && b <= 1.0 - a + 1e-12, ErrorKind::kInvalidArgument,
          "goss b must lie in [0, 1 - a]");
  require(a >= 1.0 || b > 0.0, ErrorKind::kInvalidArgument, "goss b must be positive when a < 1");
  const std::size_t n = gradients.size();
  GossSample out;
  if (a >= 1.0) {
    out.indices.resize(n);
    std::iota(out.indices.begin(), out.indices.end(), std::size_t{0});
    out.weights.assign(n, 1.0);
    return out;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(gradients[i]) > std::abs(gradients[j]);
  });
  const std::size_t top = ceil_count(a, n);
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top), order.end());
  std::sort(rest.begin(), rest.end());
  const std::size_t draw = std::min(ceil_count(b, n), rest.size());

  Rng rng(seed);
  for (std::size_t i = 0; i < draw; ++i) {
    const auto j = static_cast<std::size_t>(
        uniform_int(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(rest.size() - 1)));
    std::swap(rest[i], rest[j]);
  }

  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < top; ++i) w[order[i]] = 1.0;
  const double amplify = (1.0 - a) / b;
  for (std::size_t i = 0; i < draw; ++i) w[rest[i]] = amplify;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] > 0.0) {
      out.indices.push_back(i);
      out.weights.push_back(w[i]);
    }
  }
  return out;
}

std::vector<double> dense_weights(const GossSample& sample, std::size_t n) {
  std::vector<double> w(n, 0.0);
  for (std::size_t k = 0; k < sample.indices.size(); ++k) {
    require(sample.indices[k] < n, ErrorKind::kInvalidArgument, "sample index out of range");
    w[sample.indices[k]] = sample.weights[k];
  }
  return w;
}

}  // namespace physio::gbdt
