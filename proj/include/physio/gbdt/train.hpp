#pragma once

#include <span>
#include <string>
#include <vector>

#include "physio/gbdt/matrix.hpp"
#include "physio/gbdt/model.hpp"

namespace physio::gbdt {

struct ValidationSet {
  const Matrix* x = nullptr;
  std::span<const int> y;

  bool present() const noexcept { return x != nullptr; }
};

// Binary-logloss boosting. Without a validation set every grown tree is used.
// With one, best_iteration minimises validation logloss over rounds 0..T, where
// round 0 is the prior-only model.
GbdtModel train(const Matrix& x, std::span<const int> y, const ValidationSet& valid,
                const TrainConfig& cfg, std::vector<std::string> feature_names = {});

std::vector<std::string> default_feature_names(std::size_t n);

}  // namespace physio::gbdt
