#pragma once

#include <filesystem>
#include <vector>

#include "physio/signal/time_series.hpp"

namespace physio::pipeline {

// DEAP-shaped CSV layout:
//   <root>/subject_<id>/trial_<id>.csv         header of the 8 channel names,
//                                              then baseline + stimulus rows
//   <root>/subject_<id>/trial_<id>.labels.csv  header valence,arousal,liking + one row
inline constexpr std::size_t kBaselineRows = 384;
inline constexpr std::size_t kTrialRows = 8064;

// Trials ordered by (subject, trial); the first kBaselineRows samples become baselines.
std::vector<signal::Trial> ingest_dataset(const std::filesystem::path& root,
                                          std::size_t expected_rows = kTrialRows);

void write_dataset(const std::filesystem::path& root, const std::vector<signal::Trial>& trials);

}  // namespace physio::pipeline
