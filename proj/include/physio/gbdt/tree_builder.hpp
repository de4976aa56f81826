#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "physio/gbdt/matrix.hpp"
#include "physio/gbdt/model.hpp"

namespace physio::gbdt {

// Per-tree uniform feature subset of size max(1, round(fraction * n_features)), ascending.
std::vector<std::size_t> feature_subset(std::size_t n_features, double fraction, std::uint64_t seed);

// Grows one tree leaf-wise on weighted gradient statistics. Rows with weight 0
// are out of bag. Leaf values are the unshrunk Newton step -G / (H + lambda).
Tree grow_tree(const Matrix& features, std::span<const double> grad, std::span<const double> hess,
               std::span<const double> weights, const TrainConfig& cfg, std::uint64_t seed);

}  // namespace physio::gbdt
