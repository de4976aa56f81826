#pragma once

#include <cstdint>
#include <vector>

#include "physio/signal/time_series.hpp"

namespace physio::pipeline {

// Desk-scale stand-in for the DEAP recordings with planted rating effects:
//   valence <-> vEOG irregularity (noise-to-signal ratio)
//   arousal <-> dominant frequency of vEOG and Resp
//   liking  <-> PPG irregularity and Temp drift
struct SyntheticSpec {
  int n_subjects = 8;
  int trials_per_subject = 20;
  double effect_strength = 1.0;   // [0, 1]; 0 makes every channel label-independent
  double subject_variance = 0.1;  // scale of per-subject parameter offsets
  std::uint64_t seed = 0;
  double duration_s = 60.0;       // stimulus part; a 3 s baseline is always added

  void validate() const;
};

inline constexpr double kBaselineSeconds = 3.0;

std::vector<signal::Trial> generate_synthetic(const SyntheticSpec& spec);

}  // namespace physio::pipeline
