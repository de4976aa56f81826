#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace physio::signal {

inline constexpr double kDefaultSampleRateHz = 128.0;

/// Uniformly sampled scalar signal. Non-empty, finite, positive sample rate.
class TimeSeries {
 public:
  explicit TimeSeries(std::vector<double> values, double sample_rate_hz = kDefaultSampleRateHz);

  std::span<const double> values() const& noexcept { return values_; }
  std::span<const double> values() const&& = delete;
  const std::vector<double>& vec() const noexcept { return values_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const TimeSeries&) const = default;

 private:
  std::vector<double> values_;
  double sample_rate_hz_;
};

enum class ChannelKind { hEOG, vEOG, zEMG, tEMG, SCR, PPG, Resp, Temp };

inline constexpr std::array<ChannelKind, 8> kAllChannels = {
    ChannelKind::hEOG, ChannelKind::vEOG, ChannelKind::zEMG, ChannelKind::tEMG,
    ChannelKind::SCR,  ChannelKind::PPG,  ChannelKind::Resp, ChannelKind::Temp};

std::string_view channel_name(ChannelKind c);
std::optional<ChannelKind> parse_channel(std::string_view name);

enum class Target { valence, arousal, liking };

inline constexpr std::array<Target, 3> kAllTargets = {Target::valence, Target::arousal,
                                                     Target::liking};

std::string_view target_name(Target t);
std::optional<Target> parse_target(std::string_view name);

struct Ratings {
  double valence = 5.0;
  double arousal = 5.0;
  double liking = 5.0;

  double get(Target t) const;
  bool operator==(const Ratings&) const = default;
};

/// One subject x video recording.
struct Trial {
  int subject_id = 0;
  int trial_id = 0;
  std::map<ChannelKind, TimeSeries> channels;
  std::map<ChannelKind, TimeSeries> baselines;
  Ratings ratings;
  // Set by preprocessing: channels[SCR] then holds the phasic part.
  std::optional<TimeSeries> scr_tonic;

  const TimeSeries& channel(ChannelKind c) const;
};

}  // namespace physio::signal
