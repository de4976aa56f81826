#include "physio/eval/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "physio/error.hpp"
#include "physio/eval/metrics.hpp"

namespace physio::eval {

void Dataset::validate() const {
  const std::size_t n = rows();
  require(trials.size() == n && ratings.size() == n && features.rows() == n,
          ErrorKind::kSchemaMismatch, "dataset columns have inconsistent lengths");
  require(features.cols() == feature_names.size(), ErrorKind::kSchemaMismatch,
          "feature names do not match the feature matrix");
  require(subject_ids().size() >= 2, ErrorKind::kInvalidArgument,
          "dataset needs at least two subjects");
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      require(std::isfinite(features(r, c)), ErrorKind::kNumericalFailure,
              "non-finite feature '" + feature_names[c] + "' in row " + std::to_string(r));
    }
  }
}

std::vector<int> Dataset::labels(signal::Target target, double threshold) const {
  std::vector<int> y(rows());
  for (std::size_t r = 0; r < rows(); ++r) y[r] = binarize_label(ratings[r].get(target), threshold);
  return y;
}

std::vector<int> Dataset::subject_ids() const {
  std::vector<int> ids = subjects;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

Dataset Dataset::with_features(const std::vector<std::size_t>& columns) const {
  Dataset d = *this;
  d.features = features.select_cols(columns);
  d.feature_names.clear();
  for (std::size_t c : columns) d.feature_names.push_back(feature_names[c]);
  return d;
}

}  // namespace physio::eval
