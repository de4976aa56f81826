#pragma once

#include <span>

namespace physio::eval {

enum class WilcoxonMethod { automatic, exact, normal };

struct WilcoxonResult {
  double statistic = 0.0;  // W+ (sum of ranks of positive differences)
  int n = 0;               // non-zero differences
  double p_value = 1.0;    // two-sided
  bool exact = false;
};

// Paired two-sided signed-rank test. Zero differences are dropped; ties get
// midranks. automatic = exact enumeration for n <= 12, else normal approximation
// with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method = WilcoxonMethod::automatic);

}  // namespace physio::eval
