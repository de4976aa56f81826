#include "physio/pipeline/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "physio/error.hpp"
#include "physio/util/rng.hpp"

namespace physio::pipeline {

using signal::ChannelKind;
using signal::TimeSeries;

namespace {

constexpr double kFs = signal::kDefaultSampleRateHz;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPositiveRate = 0.6;

// Per-subject parameter offsets, one per planted knob plus nuisance channels.
struct SubjectOffsets {
  double veog_noise = 0.0;
  double freq = 0.0;
  double ppg_noise = 0.0;
  double temp_drift = 0.0;
  double nuisance = 0.0;
};

// Latent in [0, 1], bimodal around 0.5 so the binarised label is well defined.
double draw_latent(Rng& rng) {
  return uniform01(rng) < kPositiveRate ? uniform(rng, 0.56, 1.0) : uniform(rng, 0.0, 0.44);
}

double rating_from(double latent, Rng& rng) {
  const double r = 1.0 + 8.0 * latent + 0.15 * normal01(rng);
  return std::clamp(r, 1.0, 9.0);
}

// x_t = phi x_{t-1} + e_t with unit stationary variance.
std::vector<double> ar_noise(std::size_t n, double phi, Rng& rng) {
  std::vector<double> x(n);
  const double scale = std::sqrt(1.0 - phi * phi);
  double prev = normal01(rng);
  for (std::size_t i = 0; i < n; ++i) {
    prev = phi * prev + scale * normal01(rng);
    x[i] = prev;
  }
  return x;
}

struct Tone {
  double freq;
  double amp;
};

std::vector<double> tones_plus_noise(std::size_t n, const std::vector<Tone>& tones,
                                     double noise, double phi, Rng& rng) {
  std::vector<double> x = ar_noise(n, phi, rng);
  for (double& v : x) v *= noise;
  for (const Tone& t : tones) {
    const double phase = kTwoPi * uniform01(rng);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += t.amp * std::sin(kTwoPi * t.freq * static_cast<double>(i) / kFs + phase);
    }
  }
  return x;
}

}  // namespace

void SyntheticSpec::validate() const {
  require(n_subjects >= 2, ErrorKind::kInvalidArgument, "synthetic data needs >= 2 subjects");
  require(trials_per_subject >= 2, ErrorKind::kInvalidArgument,
          "synthetic data needs >= 2 trials per subject");
  require(effect_strength >= 0.0 && effect_strength <= 1.0, ErrorKind::kInvalidArgument,
          "effect_strength must lie in [0, 1]");
  require(subject_variance >= 0.0 && std::isfinite(subject_variance), ErrorKind::kInvalidArgument,
          "subject_variance must be >= 0");
  require(duration_s >= 4.0 && duration_s <= 600.0, ErrorKind::kInvalidArgument,
          "duration_s must lie in [4, 600]");
}

std::vector<signal::Trial> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto base_n = static_cast<std::size_t>(kBaselineSeconds * kFs);
  const auto stim_n = static_cast<std::size_t>(std::llround(spec.duration_s * kFs));
  const std::size_t total = base_n + stim_n;
  const double s = spec.effect_strength;

  std::vector<signal::Trial> trials;
  trials.reserve(static_cast<std::size_t>(spec.n_subjects * spec.trials_per_subject));
  for (int subj = 1; subj <= spec.n_subjects; ++subj) {
    Rng srng(derive_seed(spec.seed, static_cast<std::uint64_t>(subj)));
    const double v = spec.subject_variance;
    const SubjectOffsets off{v * normal01(srng), v * normal01(srng), v * normal01(srng),
                             v * normal01(srng), v * normal01(srng)};
    for (int t = 1; t <= spec.trials_per_subject; ++t) {
      Rng rng(derive_seed(derive_seed(spec.seed, static_cast<std::uint64_t>(subj)),
                          static_cast<std::uint64_t>(1000 + t)));
      const double lv = draw_latent(rng);
      const double la = draw_latent(rng);
      const double ll = draw_latent(rng);
      // Drives in [-1, 1]; zero effect strength removes every label dependence.
      const double dv = s * (2.0 * lv - 1.0);
      const double da = s * (2.0 * la - 1.0);
      const double dl = s * (2.0 * ll - 1.0);

      signal::Trial trial;
      trial.subject_id = subj;
      trial.trial_id = t;
      trial.ratings = {rating_from(lv, rng), rating_from(la, rng), rating_from(ll, rng)};

      const double nz = 1.0 + 0.2 * off.nuisance;
      std::map<ChannelKind, std::vector<double>> raw;
      raw[ChannelKind::hEOG] =
          tones_plus_noise(total, {{0.4 * nz, 1.0}, {1.1 * nz, 0.4}}, 0.6, 0.7, rng);
      const double f_v = 3.0 * (1.0 + 0.45 * da + 0.3 * off.freq);
      const double veog_noise = 0.5 * std::exp(1.4 * dv + off.veog_noise);
      raw[ChannelKind::vEOG] = tones_plus_noise(total, {{f_v, 1.0}}, veog_noise, 0.3, rng);
      raw[ChannelKind::zEMG] = tones_plus_noise(total, {{7.0 * nz, 0.3}}, 1.0, 0.2, rng);
      raw[ChannelKind::tEMG] =
          tones_plus_noise(total, {{5.0 * nz, 0.4}, {11.0, 0.2}, {17.0, 0.1}}, 1.0, 0.1, rng);
      // Skin conductance: slow level plus sparse phasic bumps.
      {
        std::vector<double> scr = tones_plus_noise(total, {{0.05 * nz, 1.0}}, 0.05, 0.95, rng);
        double bump = 0.0;
        for (double& x : scr) {
          if (uniform01(rng) < 1.0 / 600.0) bump += 0.8 + 0.4 * uniform01(rng);
          bump *= 0.995;
          x += bump;
        }
        raw[ChannelKind::SCR] = std::move(scr);
      }
      const double hr = 1.2 * (1.0 + 0.1 * off.nuisance);
      const double ppg_noise = 0.25 * std::exp(1.4 * dl + off.ppg_noise);
      raw[ChannelKind::PPG] =
          tones_plus_noise(total, {{hr, 1.0}, {2.0 * hr, 0.5}, {3.0 * hr, 0.2}}, ppg_noise, 0.3, rng);
      const double f_r = 1.0 * (1.0 + 0.45 * da + 0.3 * off.freq);
      raw[ChannelKind::Resp] = tones_plus_noise(total, {{f_r, 1.0}}, 0.3, 0.5, rng);
      {
        std::vector<double> temp = ar_noise(total, 0.98, rng);
        const double slope = 1.5 * (1.0 + dl + off.temp_drift);
        for (std::size_t i = 0; i < total; ++i) {
          const double u = static_cast<double>(i) / static_cast<double>(total);
          temp[i] = 0.3 * temp[i] + slope * u;
        }
        raw[ChannelKind::Temp] = std::move(temp);
      }

      for (auto& [channel, x] : raw) {
        std::vector<double> base(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(base_n));
        std::vector<double> stim(x.begin() + static_cast<std::ptrdiff_t>(base_n), x.end());
        trial.baselines.emplace(channel, TimeSeries(std::move(base)));
        trial.channels.emplace(channel, TimeSeries(std::move(stim)));
      }
      trials.push_back(std::move(trial));
    }
  }
  return trials;
}

}  // namespace physio::pipeline
