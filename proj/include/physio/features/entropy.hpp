#pragma once

#include <cstdint>
#include <span>

#include "physio/signal/time_series.hpp"

namespace physio::features {

using signal::TimeSeries;

enum class ToleranceMode { absolute, std_scaled };

struct EntropyConfig {
  int embedding_dim = 2;      // m
  double tolerance = 0.15;    // r
  int fuzzy_power = 2;        // n
  ToleranceMode tolerance_mode = ToleranceMode::std_scaled;

  void validate() const;
};

// Tolerance actually used for a series: r, or r * population std.
double effective_tolerance(std::span<const double> x, const EntropyConfig& cfg);

/// Sample entropy -log(A/B) over the N - m shared templates, Chebyshev
/// distance, self-matches excluded. When A == 0 the finite cap
/// log(B) + log(N - m) is returned (B over ordered pairs, at least 1).
double sample_entropy(const TimeSeries& ts, const EntropyConfig& cfg);

/// Fuzzy entropy ln(Phi^m) - ln(Phi^{m+1}) with mean-removed templates and
/// membership exp(-d^n / r) (r scaled by std^n in std_scaled mode).
double fuzzy_entropy(const TimeSeries& ts, const EntropyConfig& cfg);

/// Mean squared amplitude.
double energy(const TimeSeries& ts);
double energy(std::span<const double> x);

namespace kernel {

struct MatchCounts {
  std::int64_t a = 0;  // unordered (m+1)-length matches
  std::int64_t b = 0;  // unordered m-length matches
};

// OpenMP over template rows; counts are exact so the result is thread-count independent.
MatchCounts sample_entropy_counts(std::span<const double> x, int m, double r);

struct FuzzySums {
  double phi_m = 0.0;   // sum over unordered pairs of D_m
  double phi_m1 = 0.0;  // same for m+1
};

// Row sums are reduced serially in row order, so results do not depend on the
// thread count. `scale` multiplies d^n before exponentiation (1 / r_eff').
FuzzySums fuzzy_entropy_sums(std::span<const double> x, int m, int power, double scale);

}  // namespace kernel

}  // namespace physio::features
