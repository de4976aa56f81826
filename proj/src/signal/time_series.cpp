#include "physio/signal/time_series.hpp"

#include <cmath>

#include "physio/error.hpp"

namespace physio::signal {

TimeSeries::TimeSeries(std::vector<double> values, double sample_rate_hz)
    : values_(std::move(values)), sample_rate_hz_(sample_rate_hz) {
  require(!values_.empty(), ErrorKind::kInvalidArgument, "time series must be non-empty");
  require(sample_rate_hz_ > 0.0 && std::isfinite(sample_rate_hz_), ErrorKind::kInvalidArgument,
          "sample rate must be positive");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorKind::kInvalidArgument, "non-finite sample at index " + std::to_string(i));
    }
  }
}

std::string_view channel_name(ChannelKind c) {
  switch (c) {
    case ChannelKind::hEOG: return "hEOG";
    case ChannelKind::vEOG: return "vEOG";
    case ChannelKind::zEMG: return "zEMG";
    case ChannelKind::tEMG: return "tEMG";
    case ChannelKind::SCR: return "SCR";
    case ChannelKind::PPG: return "PPG";
    case ChannelKind::Resp: return "Resp";
    case ChannelKind::Temp: return "Temp";
  }
  return "?";
}

std::optional<ChannelKind> parse_channel(std::string_view name) {
  for (ChannelKind c : kAllChannels) {
    if (channel_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view target_name(Target t) {
  switch (t) {
    case Target::valence: return "valence";
    case Target::arousal: return "arousal";
    case Target::liking: return "liking";
  }
  return "?";
}

std::optional<Target> parse_target(std::string_view name) {
  for (Target t : kAllTargets) {
    if (target_name(t) == name) return t;
  }
  return std::nullopt;
}

double Ratings::get(Target t) const {
  switch (t) {
    case Target::valence: return valence;
    case Target::arousal: return arousal;
    case Target::liking: return liking;
  }
  return 0.0;
}

const TimeSeries& Trial::channel(ChannelKind c) const {
  auto it = channels.find(c);
  if (it == channels.end()) {
    fail(ErrorKind::kSchemaMismatch,
         "trial " + std::to_string(trial_id) + " missing channel " + std::string(channel_name(c)));
  }
  return it->second;
}

}  // namespace physio::signal
