#pragma once

#include <map>
#include <string>
#include <vector>

#include "physio/features/entropy.hpp"
#include "physio/signal/time_series.hpp"

namespace physio::features {

/// One SSA channel family in canonical order, e.g. {"vEOG", 2} or {"GSR", 2}.
struct ChannelGroup {
  std::string tag;
  int components = 0;
};

/// Canonical feature layout: groups in ChannelKind order, component index
/// ascending, then SE, FE, En.
class FeatureSchema {
 public:
  explicit FeatureSchema(std::vector<ChannelGroup> groups);

  // 17 components -> 51 features. SCR appears as GSR (phasic SSA 1 + tonic).
  static FeatureSchema paper_default();

  const std::vector<ChannelGroup>& groups() const& noexcept { return groups_; }
  const std::vector<std::string>& names() const& noexcept { return names_; }
  void groups() const&& = delete;
  void names() const&& = delete;
  std::size_t size() const noexcept { return names_.size(); }
  int total_components() const;

  bool operator==(const FeatureSchema& other) const { return names_ == other.names_; }

 private:
  std::vector<ChannelGroup> groups_;
  std::vector<std::string> names_;
};

std::string feature_tag(signal::ChannelKind c);  // "GSR" for SCR, channel name otherwise

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;

  bool operator==(const FeatureVector&) const = default;
};

using ComponentMap = std::map<std::string, std::vector<signal::TimeSeries>>;

/// SE, FE and En for every component in schema order.
/// Throws kSchemaMismatch naming the channel on missing or miscounted groups.
FeatureVector extract_feature_vector(const ComponentMap& components, const EntropyConfig& cfg,
                                     const FeatureSchema& schema = FeatureSchema::paper_default());

}  // namespace physio::features
