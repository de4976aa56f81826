#include "physio/eval/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "physio/error.hpp"
#include "physio/util/format.hpp"
#include "physio/util/stats.hpp"

namespace physio::eval {

int binarize_label(double rating, double threshold) {
  require(std::isfinite(rating) && rating >= 1.0 && rating <= 9.0, ErrorKind::kInvalidArgument,
          "rating " + format_double(rating) + " lies outside [1, 9]");
  return rating > threshold ? 1 : 0;
}

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  require(y_true.size() == y_pred.size() && !y_true.empty(), ErrorKind::kInvalidArgument,
          "metric inputs must have equal non-zero length");
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == 1;
    const bool p = y_pred[i] == 1;
    correct += t == p ? 1 : 0;
    tp += t && p ? 1 : 0;
    fp += !t && p ? 1 : 0;
    fn += t && !p ? 1 : 0;
  }
  Metrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
  // 2PR/(P+R) written in counts: 2tp / (2tp + fp + fn).
  const std::size_t denom = 2 * tp + fp + fn;
  m.f1 = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return m;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = mean_of(values);
  s.se = sample_std(values) / std::sqrt(static_cast<double>(values.size()));
  return s;
}

}  // namespace physio::eval
