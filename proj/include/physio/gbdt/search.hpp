#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "physio/gbdt/matrix.hpp"
#include "physio/gbdt/model.hpp"

namespace physio::gbdt {

// A real dimension sampled uniformly on (lo, hi], or uniformly from `choices`
// when that list is non-empty.
struct RealDim {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> choices;
};

struct IntDim {
  int lo = 0;
  int hi = 0;
};

struct SearchSpace {
  RealDim learning_rate{0.01, 0.5, {}};
  RealDim feature_fraction{0.0, 1.0, {}};
  IntDim num_leaves{5, 20};
  IntDim min_data_in_leaf{10, 100};
  IntDim max_depth{5, 20};

  void validate() const;
};

TrainConfig sample_config(const SearchSpace& space, const TrainConfig& base, std::uint64_t seed);

struct InnerSplit {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> valid_rows;
};

// Holds out max(1, round(fraction * subjects)) whole subjects. Draws are retried
// until the training side keeps two samples of each class.
InnerSplit inner_subject_split(std::span<const int> groups, std::span<const int> y,
                               double fraction, std::uint64_t seed);

struct SearchTrial {
  TrainConfig config;
  double valid_logloss = 0.0;
  int best_iteration = 0;
};

struct SearchResult {
  TrainConfig best;
  double best_logloss = 0.0;
  std::vector<SearchTrial> trials;
};

// `groups` carries the subject id per row; pass an empty span to split by row.
// Non-searched fields (GOSS rates, rounds, lambda) come from `base`.
SearchResult random_search(const Matrix& x, std::span<const int> y, std::span<const int> groups,
                           const SearchSpace& space, int iterations, std::uint64_t seed,
                           const TrainConfig& base = {});

}  // namespace physio::gbdt
