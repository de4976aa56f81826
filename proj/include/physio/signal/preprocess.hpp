#pragma once

#include <map>
#include <set>
#include <utility>

#include "physio/signal/time_series.hpp"

namespace physio::signal {

struct PreprocessConfig {
  std::map<ChannelKind, int> smooth_span = {
      {ChannelKind::hEOG, 5}, {ChannelKind::vEOG, 5}, {ChannelKind::zEMG, 5},
      {ChannelKind::tEMG, 5}, {ChannelKind::SCR, 64}, {ChannelKind::PPG, 5},
      {ChannelKind::Resp, 5}, {ChannelKind::Temp, 64}};
  std::set<ChannelKind> detrend_exempt = {ChannelKind::Temp, ChannelKind::SCR};
  double tonic_window_s = 4.0;

  int span_for(ChannelKind c) const;
  void validate() const;
};

// Centered moving average. Window is [i - span/2, i + (span-1)/2]; near the
// edges it shrinks symmetrically to radius min(i, n-1-i).
TimeSeries moving_average_smooth(const TimeSeries& ts, int span);

TimeSeries baseline_correct(const TimeSeries& ts, const TimeSeries& baseline);

// Zero mean, unit population std. Throws kDegenerateSignal on zero variance.
TimeSeries znormalize(const TimeSeries& ts);

// Removes the least-squares quadratic in the sample index.
TimeSeries detrend_quadratic(const TimeSeries& ts);

struct ScrParts {
  TimeSeries phasic;
  TimeSeries tonic;
};

// Tonic = centered moving median over tonic_window_s; phasic = ts - tonic.
// phasic[i] + tonic[i] == ts[i] holds bit-exactly.
ScrParts scr_split(const TimeSeries& ts, double tonic_window_s);

// smooth -> baseline-correct -> znormalize -> detrend (unless exempt); SCR is
// then split, channels[SCR] becomes the phasic part and scr_tonic the tonic.
Trial preprocess_trial(const Trial& trial, const PreprocessConfig& cfg);

}  // namespace physio::signal
