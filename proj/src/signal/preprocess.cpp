#include "physio/signal/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "physio/error.hpp"
#include "physio/util/stats.hpp"

namespace physio::signal {

namespace {

// Half-widths of a (possibly even) centered window.
struct Window {
  std::size_t left;
  std::size_t right;
};

Window window_for(std::size_t span) { return {span / 2, (span - 1) / 2}; }

// Bounds [lo, hi] of the window at i, shrunk symmetrically at the edges.
std::pair<std::size_t, std::size_t> bounds_at(std::size_t i, std::size_t n, Window w) {
  if (i >= w.left && i + w.right <= n - 1) return {i - w.left, i + w.right};
  const std::size_t k = std::min({i, n - 1 - i, w.left, w.right});
  return {i - k, i + k};
}

}  // namespace

int PreprocessConfig::span_for(ChannelKind c) const {
  auto it = smooth_span.find(c);
  return it == smooth_span.end() ? 1 : it->second;
}

void PreprocessConfig::validate() const {
  for (const auto& [channel, span] : smooth_span) {
    require(span >= 1, ErrorKind::kConfig,
            "smooth span for " + std::string(channel_name(channel)) + " must be >= 1");
  }
  require(tonic_window_s > 0.0, ErrorKind::kConfig, "tonic_window_s must be positive");
}

TimeSeries moving_average_smooth(const TimeSeries& ts, int span) {
  require(span >= 1, ErrorKind::kInvalidArgument, "span must be >= 1");
  const std::size_t n = ts.size();
  require(static_cast<std::size_t>(span) <= n, ErrorKind::kInvalidArgument,
          "span " + std::to_string(span) + " exceeds series length " + std::to_string(n));
  if (span == 1) return ts;
  const Window w = window_for(static_cast<std::size_t>(span));
  auto x = ts.values();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = bounds_at(i, n, w);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += x[j];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return TimeSeries(std::move(out), ts.sample_rate_hz());
}

TimeSeries baseline_correct(const TimeSeries& ts, const TimeSeries& baseline) {
  // TimeSeries cannot be empty; the check guards default-moved inputs.
  require(baseline.size() > 0, ErrorKind::kInvalidArgument, "baseline is empty");
  const double mu = mean_of(baseline.values());
  std::vector<double> out(ts.vec());
  for (double& v : out) v -= mu;
  return TimeSeries(std::move(out), ts.sample_rate_hz());
}

TimeSeries znormalize(const TimeSeries& ts) {
  auto x = ts.values();
  const double mu = mean_of(x);
  const double sd = population_std(x);
  double max_abs = 0.0;
  for (double v : x) max_abs = std::max(max_abs, std::abs(v));
  if (!(sd > 1e-13 * max_abs) || sd == 0.0) {
    fail(ErrorKind::kDegenerateSignal, "zero-variance signal cannot be normalised");
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) / sd;
  return TimeSeries(std::move(out), ts.sample_rate_hz());
}

TimeSeries detrend_quadratic(const TimeSeries& ts) {
  const auto n = static_cast<Eigen::Index>(ts.size());
  require(n >= 3, ErrorKind::kInvalidArgument, "quadratic detrend needs at least 3 samples");
  // Index rescaled to [-1, 1]; spans the same space as {1, t, t^2}.
  Eigen::MatrixXd design(n, 3);
  const double half = 0.5 * static_cast<double>(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (static_cast<double>(i) - half) / half;
    design(i, 0) = 1.0;
    design(i, 1) = u;
    design(i, 2) = u * u;
  }
  Eigen::Map<const Eigen::VectorXd> y(ts.values().data(), n);
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - design * coef;
  return TimeSeries(std::vector<double>(resid.data(), resid.data() + n), ts.sample_rate_hz());
}

ScrParts scr_split(const TimeSeries& ts, double tonic_window_s) {
  require(tonic_window_s > 0.0, ErrorKind::kInvalidArgument, "tonic window must be positive");
  const std::size_t n = ts.size();
  const auto win = static_cast<std::size_t>(std::llround(tonic_window_s * ts.sample_rate_hz()));
  require(win >= 3, ErrorKind::kInvalidArgument, "tonic window must cover at least 3 samples");
  require(win <= n, ErrorKind::kInvalidArgument,
          "tonic window of " + std::to_string(win) + " samples exceeds signal length " +
              std::to_string(n));

  const Window w = window_for(win);
  auto x = ts.values();
  std::vector<double> tonic(n), phasic(n), scratch;
  scratch.reserve(win);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = bounds_at(i, n, w);
    scratch.assign(x.begin() + static_cast<std::ptrdiff_t>(lo),
                   x.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    const std::size_t mid = scratch.size() / 2;
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(mid),
                     scratch.end());
    double med = scratch[mid];
    if (scratch.size() % 2 == 0) {
      const double lower = *std::max_element(scratch.begin(),
                                             scratch.begin() + static_cast<std::ptrdiff_t>(mid));
      med = 0.5 * (lower + med);
    }
    // Re-derive the pair until the sum reproduces x exactly.
    double t = med;
    double p = x[i] - t;
    for (int iter = 0; iter < 4 && p + t != x[i]; ++iter) {
      t = x[i] - p;
      p = x[i] - t;
    }
    if (p + t != x[i]) {
      t = 0.0;
      p = x[i];
    }
    tonic[i] = t;
    phasic[i] = p;
  }
  return {TimeSeries(std::move(phasic), ts.sample_rate_hz()),
          TimeSeries(std::move(tonic), ts.sample_rate_hz())};
}

Trial preprocess_trial(const Trial& trial, const PreprocessConfig& cfg) {
  Trial out;
  out.subject_id = trial.subject_id;
  out.trial_id = trial.trial_id;
  out.ratings = trial.ratings;
  for (ChannelKind c : kAllChannels) {
    const std::string where = "subject " + std::to_string(trial.subject_id) + " trial " +
                              std::to_string(trial.trial_id) + " channel " +
                              std::string(channel_name(c));
    auto ch = trial.channels.find(c);
    require(ch != trial.channels.end(), ErrorKind::kSchemaMismatch, where + ": channel missing");
    auto bl = trial.baselines.find(c);
    require(bl != trial.baselines.end(), ErrorKind::kSchemaMismatch, where + ": baseline missing");

    const char* step = "smooth";
    try {
      TimeSeries ts = moving_average_smooth(ch->second, cfg.span_for(c));
      step = "baseline";
      ts = baseline_correct(ts, bl->second);
      step = "znormalize";
      ts = znormalize(ts);
      if (!cfg.detrend_exempt.contains(c)) {
        step = "detrend";
        ts = detrend_quadratic(ts);
      }
      if (c == ChannelKind::SCR) {
        step = "scr_split";
        ScrParts parts = scr_split(ts, cfg.tonic_window_s);
        out.scr_tonic = std::move(parts.tonic);
        ts = std::move(parts.phasic);
      }
      out.channels.emplace(c, std::move(ts));
      out.baselines.emplace(c, bl->second);
    } catch (const Error& e) {
      throw Error(e.kind(), where + " [" + step + "]: " + e.what());
    }
  }
  return out;
}

}  // namespace physio::signal
