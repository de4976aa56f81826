#pragma once

#include <span>

namespace physio::eval {

// 1 when rating > threshold; ratings must lie on the 1..9 scale.
int binarize_label(double rating, double threshold = 5.0);

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;  // positive class; 0 when precision + recall == 0
};

Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred);

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // sample std / sqrt(count)
};

Summary summarize(std::span<const double> values);

}  // namespace physio::eval
