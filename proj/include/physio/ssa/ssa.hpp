#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Core>

#include "physio/signal/time_series.hpp"

namespace physio::ssa {

using signal::ChannelKind;
using signal::TimeSeries;

/// Lagged-window (Hankel) matrix, L rows x K = N - L + 1 columns.
using TrajectoryMatrix = Eigen::MatrixXd;

/// Component count per channel; std::nullopt selects the hard-threshold rank.
struct SsaConfig {
  int window_len = 12;
  std::map<ChannelKind, std::optional<int>> kept_components = {
      {ChannelKind::hEOG, 2}, {ChannelKind::vEOG, 2}, {ChannelKind::zEMG, 1},
      {ChannelKind::tEMG, 3}, {ChannelKind::SCR, 1},  {ChannelKind::PPG, 4},
      {ChannelKind::Resp, 2}, {ChannelKind::Temp, 1}};

  void validate() const;
};

struct SsaDecomposition {
  std::vector<TimeSeries> components;   // diagonally averaged elementary series, rank order
  std::vector<double> singular_values;  // sqrt of all L eigenvalues, descending, >= 0
  int window_len = 0;
  int rank = 0;                         // d: count of eigenvalues above 1e-12 * lambda_1
};

TrajectoryMatrix embed(const TimeSeries& ts, int window_len);

SsaDecomposition decompose(const TimeSeries& ts, int window_len);

TimeSeries diagonal_average(const Eigen::Ref<const Eigen::MatrixXd>& m,
                            double sample_rate_hz = signal::kDefaultSampleRateHz);

// Gavish-Donoho hard threshold with unknown noise level:
// tau = omega(beta) * median(sigma), omega = 0.56b^3 - 0.95b^2 + 1.82b + 1.43.
int hard_threshold_rank(const std::vector<double>& singular_values, int rows, int cols);

// 1-based indices into decomp.components.
TimeSeries reconstruct_selected(const SsaDecomposition& decomp, const std::set<int>& indices);

}  // namespace physio::ssa
