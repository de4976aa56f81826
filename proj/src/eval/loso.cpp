#include "physio/eval/loso.hpp"

#include <algorithm>
#include <exception>
#include <map>

#include "physio/error.hpp"
#include "physio/gbdt/train.hpp"
#include "physio/util/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace physio::eval {

using gbdt::Matrix;
using gbdt::TrainConfig;

namespace {

constexpr std::uint64_t kSearchStream = 11;
constexpr std::uint64_t kInnerStream = 12;
constexpr std::uint64_t kGlobalStream = 13;

template <typename T>
std::vector<T> gather(std::span<const T> v, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

std::vector<std::size_t> map_rows(std::span<const std::size_t> local,
                                  std::span<const std::size_t> global) {
  std::vector<std::size_t> out;
  out.reserve(local.size());
  for (std::size_t i : local) out.push_back(global[i]);
  return out;
}

bool trainable(std::span<const int> y) {
  std::size_t pos = 0;
  for (int v : y) pos += static_cast<std::size_t>(v);
  return pos >= 2 && y.size() - pos >= 2;
}

int worker_count(int jobs) {
#ifdef _OPENMP
  return jobs > 0 ? jobs : omp_get_max_threads();
#else
  (void)jobs;
  return 1;
#endif
}

// Everything a fold needs to fit its final model on training subjects only.
struct FoldModel {
  TrainConfig config;
  gbdt::GbdtModel model;
};

TrainConfig choose_config(const Matrix& x, std::span<const int> y, std::span<const int> groups,
                          const LosoConfig& cfg, const std::optional<TrainConfig>& global,
                          int subject, std::span<const std::size_t> rows, FoldResult& fr) {
  switch (cfg.mode) {
    case SearchMode::fixed:
      return cfg.base;
    case SearchMode::global:
      return *global;
    case SearchMode::per_fold:
      break;
  }
  if (cfg.audit) fr.touched[kStageSearch] = {rows.begin(), rows.end()};
  const auto seed = derive_seed(derive_seed(cfg.seed, kSearchStream), static_cast<std::uint64_t>(subject));
  return gbdt::random_search(x, y, groups, cfg.space, cfg.search_iterations, seed, cfg.base).best;
}

FoldModel fit_fold(const Matrix& x, std::span<const int> y, std::span<const int> groups,
                   const TrainConfig& config, const LosoConfig& cfg, int subject,
                   std::span<const std::size_t> rows, FoldResult& fr,
                   const std::vector<std::string>& names) {
  const auto seed = derive_seed(derive_seed(cfg.seed, kInnerStream), static_cast<std::uint64_t>(subject));
  const gbdt::InnerSplit split = gbdt::inner_subject_split(groups, y, 0.1, seed);
  const Matrix xt = x.select_rows(split.train_rows);
  const Matrix xv = x.select_rows(split.valid_rows);
  const std::vector<int> yt = gather(y, split.train_rows);
  const std::vector<int> yv = gather(y, split.valid_rows);
  if (cfg.audit) {
    auto& tr = fr.touched[kStageTrain];
    auto& es = fr.touched[kStageEarlyStop];
    const auto t = map_rows(split.train_rows, rows);
    const auto v = map_rows(split.valid_rows, rows);
    tr.insert(tr.end(), t.begin(), t.end());
    es.insert(es.end(), v.begin(), v.end());
  }
  return {config, gbdt::train(xt, yt, {&xv, yv}, config, names)};
}

void finalize(CvReport& report) {
  std::vector<double> acc, f1;
  report.failed_folds = 0;
  for (const FoldResult& f : report.folds) {
    if (!f.ok) {
      ++report.failed_folds;
      continue;
    }
    acc.push_back(f.metrics.accuracy);
    f1.push_back(f.metrics.f1);
  }
  require(!acc.empty(), ErrorKind::kDegenerateLabels,
          "every LOSO fold failed: " + (report.folds.empty() ? std::string() : report.folds[0].failure));
  report.accuracy = summarize(acc);
  report.f1 = summarize(f1);
}

template <typename Fn>
void parallel_folds(std::size_t count, int jobs, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  const int threads = worker_count(jobs);
  (void)threads;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::optional<TrainConfig> global_config(const Dataset& data, std::span<const int> y,
                                         const LosoConfig& cfg) {
  if (cfg.mode != SearchMode::global) return std::nullopt;
  return gbdt::random_search(data.features, y, data.subjects, cfg.space, cfg.search_iterations,
                             derive_seed(cfg.seed, kGlobalStream), cfg.base)
      .best;
}

}  // namespace

gbdt::GbdtModel fit_full(const Dataset& data, signal::Target target, const LosoConfig& cfg) {
  cfg.validate();
  data.validate();
  const std::vector<int> y = data.labels(target, cfg.label_threshold);
  require(trainable(y), ErrorKind::kDegenerateLabels,
          "training needs at least two samples of each class");
  const TrainConfig config =
      cfg.mode == SearchMode::fixed
          ? cfg.base
          : gbdt::random_search(data.features, y, data.subjects, cfg.space, cfg.search_iterations,
                                derive_seed(cfg.seed, kGlobalStream), cfg.base)
                .best;
  const gbdt::InnerSplit split =
      gbdt::inner_subject_split(data.subjects, y, 0.1, derive_seed(cfg.seed, kInnerStream));
  const Matrix xt = data.features.select_rows(split.train_rows);
  const Matrix xv = data.features.select_rows(split.valid_rows);
  const std::vector<int> yt = gather<int>(y, split.train_rows);
  const std::vector<int> yv = gather<int>(y, split.valid_rows);
  return gbdt::train(xt, yt, {&xv, yv}, config, data.feature_names);
}

std::vector<Fold> loso_split(std::span<const int> subjects) {
  std::map<int, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < subjects.size(); ++i) by_subject[subjects[i]].push_back(i);
  require(by_subject.size() >= 2, ErrorKind::kInvalidArgument,
          "leave-one-subject-out needs at least two subjects");
  std::vector<Fold> folds;
  for (const auto& [subject, rows] : by_subject) {
    Fold f;
    f.subject = subject;
    f.test_rows = rows;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      if (subjects[i] != subject) f.train_rows.push_back(i);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

std::string_view search_mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::per_fold: return "per_fold";
    case SearchMode::global: return "global";
    case SearchMode::fixed: return "fixed";
  }
  return "per_fold";
}

std::optional<SearchMode> parse_search_mode(std::string_view s) {
  for (SearchMode m : {SearchMode::per_fold, SearchMode::global, SearchMode::fixed}) {
    if (search_mode_name(m) == s) return m;
  }
  return std::nullopt;
}

void LosoConfig::validate() const {
  base.validate();
  space.validate();
  require(mode == SearchMode::fixed || search_iterations >= 1, ErrorKind::kInvalidArgument,
          "search_iterations must be >= 1");
  require(label_threshold >= 1.0 && label_threshold <= 9.0, ErrorKind::kInvalidArgument,
          "label threshold must lie in [1, 9]");
  require(jobs >= 0, ErrorKind::kInvalidArgument, "jobs must be >= 0");
}

CvReport run_loso(const Dataset& data, signal::Target target, const LosoConfig& cfg) {
  cfg.validate();
  data.validate();
  const std::vector<int> y = data.labels(target, cfg.label_threshold);
  const std::vector<Fold> folds = loso_split(data.subjects);
  const std::optional<TrainConfig> global = global_config(data, y, cfg);

  CvReport report;
  report.target = target;
  report.mode = cfg.mode;
  report.folds.resize(folds.size());
  std::vector<std::vector<shap::ShapExplanation>> fold_shap(folds.size());
  std::vector<std::vector<shap::InteractionMatrix>> fold_inter(folds.size());

  parallel_folds(folds.size(), cfg.jobs, [&](std::size_t i) {
    const Fold& fold = folds[i];
    FoldResult& fr = report.folds[i];
    fr.subject = fold.subject;
    fr.test_rows = fold.test_rows;
    const Matrix x = data.features.select_rows(fold.train_rows);
    const std::vector<int> yt = gather<int>(y, fold.train_rows);
    const std::vector<int> groups = gather<int>(data.subjects, fold.train_rows);
    if (!trainable(yt)) {
      fr.failure = "training labels lack two samples of each class";
      return;
    }
    try {
      const TrainConfig config =
          choose_config(x, yt, groups, cfg, global, fold.subject, fold.train_rows, fr);
      const FoldModel fm =
          fit_fold(x, yt, groups, config, cfg, fold.subject, fold.train_rows, fr, data.feature_names);
      fr.config = config;
      fr.best_iteration = fm.model.best_iteration;
      const Matrix xs = data.features.select_rows(fold.test_rows);
      for (const gbdt::Prediction& p : gbdt::predict(fm.model, xs)) {
        fr.probabilities.push_back(p.probability);
        fr.predicted.push_back(p.label());
      }
      fr.metrics = compute_metrics(gather<int>(y, fold.test_rows), fr.predicted);
      if (cfg.explain) fold_shap[i] = shap::shap_values(fm.model, xs);
      if (cfg.explain_interactions) fold_inter[i] = shap::shap_interactions(fm.model, xs);
      fr.ok = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateLabels) throw;
      fr.failure = e.what();
    }
  });

  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (!report.folds[i].ok) continue;
    for (std::size_t k = 0; k < folds[i].test_rows.size(); ++k) {
      if (cfg.explain) {
        report.explained_rows.push_back(folds[i].test_rows[k]);
        report.explanations.push_back(std::move(fold_shap[i][k]));
      }
      if (cfg.explain_interactions) report.interactions.push_back(std::move(fold_inter[i][k]));
    }
  }
  finalize(report);
  return report;
}

SelectionReport run_selection(const Dataset& data, signal::Target target, const LosoConfig& cfg,
                              const CvReport* prior) {
  cfg.validate();
  data.validate();
  const std::size_t kmax = data.features.cols();
  const std::vector<int> y = data.labels(target, cfg.label_threshold);
  const std::vector<Fold> folds = loso_split(data.subjects);
  require(prior == nullptr || prior->folds.size() == folds.size(), ErrorKind::kInvalidArgument,
          "prior report does not match the dataset folds");
  const std::optional<TrainConfig> global = prior ? std::nullopt : global_config(data, y, cfg);

  std::vector<FoldResult> results(folds.size());
  std::vector<std::vector<Metrics>> per_k(folds.size());

  parallel_folds(folds.size(), cfg.jobs, [&](std::size_t i) {
    const Fold& fold = folds[i];
    FoldResult& fr = results[i];
    fr.subject = fold.subject;
    fr.test_rows = fold.test_rows;
    const Matrix x = data.features.select_rows(fold.train_rows);
    const std::vector<int> yt = gather<int>(y, fold.train_rows);
    const std::vector<int> ys = gather<int>(y, fold.test_rows);
    const std::vector<int> groups = gather<int>(data.subjects, fold.train_rows);
    if (prior && !prior->folds[i].ok) {
      fr.failure = prior->folds[i].failure;
      return;
    }
    if (!trainable(yt)) {
      fr.failure = "training labels lack two samples of each class";
      return;
    }
    try {
      const TrainConfig config =
          prior ? prior->folds[i].config
                : choose_config(x, yt, groups, cfg, global, fold.subject, fold.train_rows, fr);
      const FoldModel full =
          fit_fold(x, yt, groups, config, cfg, fold.subject, fold.train_rows, fr, data.feature_names);
      if (cfg.audit) fr.touched[kStageRanking] = fold.train_rows;
      const auto ranking = shap::global_importance(shap::shap_values(full.model, x),
                                                   data.feature_names);
      const Matrix xs_all = data.features.select_rows(fold.test_rows);
      const auto sweep = shap::select_features(ranking, [&](const std::vector<std::size_t>& cols) {
        std::vector<std::string> names;
        for (std::size_t c : cols) names.push_back(data.feature_names[c]);
        FoldResult scratch;
        const FoldModel fm = fit_fold(x.select_cols(cols), yt, groups, config, cfg, fold.subject,
                                      fold.train_rows, scratch, names);
        std::vector<int> pred;
        for (const auto& p : gbdt::predict(fm.model, xs_all.select_cols(cols))) {
          pred.push_back(p.label());
        }
        const Metrics m = compute_metrics(ys, pred);
        return shap::SubsetScore{m.accuracy, 0.0, m.f1, 0.0};
      });
      for (const auto& point : sweep.curve) {
        per_k[i].push_back({point.score.accuracy, point.score.f1});
      }
      if (cfg.audit) fr.touched[kStageSelection] = fold.train_rows;
      fr.config = config;
      fr.ok = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateLabels) throw;
      fr.failure = e.what();
      per_k[i].clear();
    }
  });

  SelectionReport report;
  report.target = target;
  report.folds = std::move(results);
  for (const FoldResult& f : report.folds) report.failed_folds += f.ok ? 0 : 1;
  require(report.failed_folds < static_cast<int>(folds.size()), ErrorKind::kDegenerateLabels,
          "every selection fold failed");
  for (std::size_t k = 1; k <= kmax; ++k) {
    std::vector<double> acc, f1;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (!report.folds[i].ok) continue;
      acc.push_back(per_k[i][k - 1].accuracy);
      f1.push_back(per_k[i][k - 1].f1);
    }
    const Summary sa = summarize(acc);
    const Summary sf = summarize(f1);
    report.ks.push_back(k);
    report.scores.push_back({sa.mean, sa.se, sf.mean, sf.se});
  }
  std::size_t ba = 0, bf = 0;
  for (std::size_t i = 1; i < report.scores.size(); ++i) {
    if (report.scores[i].accuracy > report.scores[ba].accuracy) ba = i;
    if (report.scores[i].f1 > report.scores[bf].f1) bf = i;
  }
  report.best_k_accuracy = report.ks[ba];
  report.best_k_f1 = report.ks[bf];
  return report;
}

}  // namespace physio::eval
