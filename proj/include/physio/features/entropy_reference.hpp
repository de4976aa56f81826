#pragma once

#include <span>

#include "physio/features/entropy.hpp"

// Direct O(N^2) evaluation over explicit template vectors and ordered pairs.
// Serial, no SIMD; kept as the oracle for the optimised kernels.
namespace physio::features::reference {

double sample_entropy(std::span<const double> x, const EntropyConfig& cfg);
double fuzzy_entropy(std::span<const double> x, const EntropyConfig& cfg);

}  // namespace physio::features::reference
