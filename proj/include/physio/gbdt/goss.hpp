#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace physio::gbdt {

struct GossSample {
  std::vector<std::size_t> indices;  // ascending
  std::vector<double> weights;       // parallel to indices
};

// Keeps the ceil(a*n) largest-|gradient| samples and a uniform ceil(b*n) draw of
// the rest, the latter re-weighted by (1 - a) / b.
GossSample goss_sample(std::span<const double> gradients, double a, double b, std::uint64_t seed);

// Expands a sample to a dense per-row weight vector (0 for rows left out).
std::vector<double> dense_weights(const GossSample& sample, std::size_t n);

}  // namespace physio::gbdt
