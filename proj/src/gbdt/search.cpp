#include "physio/gbdt/search.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>

#include "physio/error.hpp"
#include "physio/gbdt/train.hpp"
#include "physio/util/rng.hpp"

namespace physio::gbdt {

namespace {

constexpr int kSplitAttempts = 100;

double draw(Rng& rng, const RealDim& d) {
  if (!d.choices.empty()) {
    return d.choices[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(d.choices.size() - 1)))];
  }
  return d.lo + (d.hi - d.lo) * (1.0 - uniform01(rng));
}

int draw(Rng& rng, const IntDim& d) { return static_cast<int>(uniform_int(rng, d.lo, d.hi)); }

void check_real(const RealDim& d, const char* name, double lo_limit, double hi_limit,
                bool lo_open) {
  auto ok = [&](double v) {
    return std::isfinite(v) && (lo_open ? v > lo_limit : v >= lo_limit) && v <= hi_limit;
  };
  if (!d.choices.empty()) {
    for (double v : d.choices) {
      require(ok(v), ErrorKind::kInvalidArgument, std::string(name) + " choice out of range");
    }
    return;
  }
  require(d.lo <= d.hi, ErrorKind::kInvalidArgument, std::string(name) + " range is empty");
  require(d.lo >= lo_limit && d.hi <= hi_limit && (d.lo < d.hi || ok(d.hi)),
          ErrorKind::kInvalidArgument, std::string(name) + " range is infeasible");
}

void check_int(const IntDim& d, const char* name) {
  require(d.lo >= 1 && d.lo <= d.hi, ErrorKind::kInvalidArgument,
          std::string(name) + " range is infeasible");
}

}  // namespace

void SearchSpace::validate() const {
  check_real(learning_rate, "learning_rate", 0.0, 1e6, true);
  check_real(feature_fraction, "feature_fraction", 0.0, 1.0, true);
  check_int(num_leaves, "num_leaves");
  check_int(min_data_in_leaf, "min_data_in_leaf");
  check_int(max_depth, "max_depth");
}

TrainConfig sample_config(const SearchSpace& space, const TrainConfig& base, std::uint64_t seed) {
  Rng rng(seed);
  TrainConfig cfg = base;
  cfg.learning_rate = draw(rng, space.learning_rate);
  cfg.feature_fraction = draw(rng, space.feature_fraction);
  cfg.num_leaves = draw(rng, space.num_leaves);
  cfg.min_data_in_leaf = draw(rng, space.min_data_in_leaf);
  cfg.max_depth = draw(rng, space.max_depth);
  cfg.seed = derive_seed(seed, 7);
  return cfg;
}

InnerSplit inner_subject_split(std::span<const int> groups, std::span<const int> y,
                               double fraction, std::uint64_t seed) {
  require(groups.size() == y.size(), ErrorKind::kInvalidArgument,
          "group ids must match the label count");
  require(fraction > 0.0 && fraction < 1.0, ErrorKind::kInvalidArgument,
          "inner split fraction must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < groups.size(); ++i) by_group[groups[i]].push_back(i);
  require(by_group.size() >= 2, ErrorKind::kInvalidArgument,
          "inner split needs at least two subjects");
  std::vector<int> ids;
  for (const auto& [g, rows] : by_group) ids.push_back(g);
  const auto hold = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size()))), 1,
      ids.size() - 1);

  for (int attempt = 0; attempt < kSplitAttempts; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<int> order = ids;
    shuffle(rng, order);
    std::vector<char> held(groups.size(), 0);
    for (std::size_t k = 0; k < hold; ++k) {
      for (std::size_t r : by_group[order[k]]) held[r] = 1;
    }
    InnerSplit split;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (held[i]) {
        split.valid_rows.push_back(i);
      } else {
        split.train_rows.push_back(i);
        pos += static_cast<std::size_t>(y[i]);
      }
    }
    if (pos >= 2 && split.train_rows.size() - pos >= 2) return split;
  }
  fail(ErrorKind::kDegenerateLabels, "no inner split keeps two samples of each class");
}

SearchResult random_search(const Matrix& x, std::span<const int> y, std::span<const int> groups,
                           const SearchSpace& space, int iterations, std::uint64_t seed,
                           const TrainConfig& base) {
  require(iterations >= 1, ErrorKind::kInvalidArgument, "search iterations must be >= 1");
  space.validate();
  require(y.size() == x.rows(), ErrorKind::kInvalidArgument, "label count does not match rows");
  std::vector<int> row_groups;
  if (groups.empty()) {
    row_groups.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) row_groups[i] = static_cast<int>(i);
    groups = row_groups;
  }
  const InnerSplit split = inner_subject_split(groups, y, 0.1, derive_seed(seed, 0));
  const Matrix xt = x.select_rows(split.train_rows);
  const Matrix xv = x.select_rows(split.valid_rows);
  std::vector<int> yt;
  std::vector<int> yv;
  for (std::size_t r : split.train_rows) yt.push_back(y[r]);
  for (std::size_t r : split.valid_rows) yv.push_back(y[r]);

  const auto count = static_cast<std::size_t>(iterations);
  std::vector<SearchTrial> trials(count);
  std::vector<std::exception_ptr> errors(count);
  const ValidationSet valid{&xv, yv};
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < count; ++i) {
    try {
      TrainConfig cfg = sample_config(space, base, derive_seed(seed, 1000 + i));
      const GbdtModel m = train(xt, yt, valid, cfg);
      trials[i] = {cfg, m.valid_logloss[static_cast<std::size_t>(m.best_iteration)],
                   m.best_iteration};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SearchResult out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < count; ++i) {
    if (trials[i].valid_logloss < trials[best].valid_logloss) best = i;
  }
  out.best = trials[best].config;
  out.best_logloss = trials[best].valid_logloss;
  out.trials = std::move(trials);
  return out;
}

}  // namespace physio::gbdt
