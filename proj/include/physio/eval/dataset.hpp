#pragma once

#include <string>
#include <vector>

#include "physio/gbdt/matrix.hpp"
#include "physio/signal/time_series.hpp"

namespace physio::eval {

// One row per trial; rows are identified by their index.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<int> subjects;
  std::vector<int> trials;
  std::vector<signal::Ratings> ratings;
  gbdt::Matrix features;

  std::size_t rows() const noexcept { return subjects.size(); }
  void validate() const;
  std::vector<int> labels(signal::Target target, double threshold = 5.0) const;
  std::vector<int> subject_ids() const;  // ascending, unique
  Dataset with_features(const std::vector<std::size_t>& columns) const;
};

}  // namespace physio::eval
