#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "physio/eval/dataset.hpp"
#include "physio/features/entropy.hpp"
#include "physio/features/feature_vector.hpp"
#include "physio/signal/preprocess.hpp"
#include "physio/ssa/ssa.hpp"

namespace physio::pipeline {

struct ExtractionConfig {
  signal::PreprocessConfig preprocess;
  ssa::SsaConfig ssa;
  features::EntropyConfig entropy;

  void validate() const;
};

using ComponentCounts = std::map<signal::ChannelKind, int>;

// Fixed counts pass through; automatic channels take the median hard-threshold
// rank over the (already preprocessed) trials.
ComponentCounts resolve_components(const std::vector<signal::Trial>& preprocessed,
                                   const ssa::SsaConfig& cfg);

// Channel groups in canonical order; SCR contributes its phasic components plus the tonic level.
features::FeatureSchema schema_for(const ComponentCounts& counts);

features::ComponentMap trial_components(const signal::Trial& preprocessed,
                                        const ComponentCounts& counts, int window_len);

struct Extraction {
  eval::Dataset dataset;
  ComponentCounts counts;
};

// preprocess -> SSA -> entropy/energy features, parallel over trials.
Extraction extract_features(const std::vector<signal::Trial>& trials, const ExtractionConfig& cfg);

void write_features_csv(const std::filesystem::path& file, const eval::Dataset& data);
eval::Dataset read_features_csv(const std::filesystem::path& file);

}  // namespace physio::pipeline
