#include "physio/features/feature_vector.hpp"

#include <cmath>

#include "physio/error.hpp"

namespace physio::features {

FeatureSchema::FeatureSchema(std::vector<ChannelGroup> groups) : groups_(std::move(groups)) {
  for (const auto& g : groups_) {
    require(g.components >= 1, ErrorKind::kSchemaMismatch,
            "channel " + g.tag + " must contribute at least one component");
    for (int k = 1; k <= g.components; ++k) {
      for (const char* kind : {"SE", "FE", "En"}) {
        names_.push_back(g.tag + std::to_string(k) + "_" + kind);
      }
    }
  }
}

FeatureSchema FeatureSchema::paper_default() {
  return FeatureSchema({{"hEOG", 2},
                        {"vEOG", 2},
                        {"zEMG", 1},
                        {"tEMG", 3},
                        {"GSR", 2},
                        {"PPG", 4},
                        {"Resp", 2},
                        {"Temp", 1}});
}

int FeatureSchema::total_components() const {
  int n = 0;
  for (const auto& g : groups_) n += g.components;
  return n;
}

std::string feature_tag(signal::ChannelKind c) {
  if (c == signal::ChannelKind::SCR) return "GSR";
  return std::string(signal::channel_name(c));
}

FeatureVector extract_feature_vector(const ComponentMap& components, const EntropyConfig& cfg,
                                     const FeatureSchema& schema) {
  cfg.validate();
  for (const auto& [tag, list] : components) {
    bool known = false;
    for (const auto& g : schema.groups()) known = known || g.tag == tag;
    require(known, ErrorKind::kSchemaMismatch, "unexpected channel " + tag);
  }
  FeatureVector out;
  out.names = schema.names();
  out.values.reserve(schema.size());
  for (const auto& g : schema.groups()) {
    auto it = components.find(g.tag);
    require(it != components.end(), ErrorKind::kSchemaMismatch, "missing channel " + g.tag);
    require(static_cast<int>(it->second.size()) == g.components, ErrorKind::kSchemaMismatch,
            "channel " + g.tag + " has " + std::to_string(it->second.size()) +
                " components, expected " + std::to_string(g.components));
    for (const auto& comp : it->second) {
      out.values.push_back(sample_entropy(comp, cfg));
      out.values.push_back(fuzzy_entropy(comp, cfg));
      out.values.push_back(energy(comp));
    }
  }
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    require(std::isfinite(out.values[i]), ErrorKind::kNumericalFailure,
            "non-finite feature " + out.names[i]);
  }
  return out;
}

}  // namespace physio::features
