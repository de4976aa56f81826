// physio_explain: affect recognition from peripheral physiology with tree explanations.
//
//   synth         write a synthetic DEAP-layout dataset
//   ingest-check  validate a DEAP-layout dataset
//   extract       preprocess + SSA + entropy features -> features.csv
//   train         fit one model on every row -> model_<target>.json
//   loso          leave-one-subject-out evaluation -> report.json, predictions.csv
//   explain       SHAP values of a saved model -> shap_values.csv, importance.csv
//   select        LOSO plus the feature-selection sweep -> selection_curve.csv
//   report        everything above for each target
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "physio/error.hpp"
#include "physio/eval/loso.hpp"
#include "physio/gbdt/serialize.hpp"
#include "physio/pipeline/config.hpp"
#include "physio/pipeline/extract.hpp"
#include "physio/pipeline/ingest.hpp"
#include "physio/pipeline/report.hpp"
#include "physio/pipeline/synthetic.hpp"
#include "physio/shap/treeshap.hpp"
#include "physio/util/format.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace physio;
using pipeline::RunConfig;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
  bool paper_mode = false;
};

struct CommandOptions {
  std::string input;
  std::string features;
  std::string model;
  std::vector<std::string> targets;
  std::optional<int> subjects;
  std::optional<int> trials;
  std::optional<double> effect;
  std::optional<double> subject_variance;
  std::optional<int> iterations;
  bool interactions = false;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void log(const std::string& msg) { std::cerr << msg << '\n'; }

std::optional<int> jobs_from_env() {
  const char* v = std::getenv("PHYSIO_EXPLAIN_JOBS");
  if (v == nullptr || *v == '\0') return std::nullopt;
  const auto d = parse_double(v);
  require(d && *d >= 0 && *d == static_cast<int>(*d), ErrorKind::kConfig,
          std::string("PHYSIO_EXPLAIN_JOBS must be a non-negative integer, got '") + v + "'");
  return static_cast<int>(*d);
}

// Config file, then paper mode, then command-line overrides; validated before any work.
RunConfig resolve_config(const GlobalOptions& g, const CommandOptions& c) {
  RunConfig cfg;
  if (!g.config.empty()) cfg = pipeline::load_run_config(g.config);
  if (g.paper_mode || cfg.paper_mode) {
    for (const auto& field : pipeline::apply_paper_mode(cfg)) {
      log("paper mode: overriding " + field);
    }
  }
  if (g.seed) {
    cfg.loso.seed = *g.seed;
    cfg.synthetic.seed = *g.seed;
  }
  if (!g.out.empty()) cfg.output = g.out;
  if (const auto env = jobs_from_env()) cfg.loso.jobs = *env;
  if (g.jobs) cfg.loso.jobs = *g.jobs;
  if (!c.input.empty()) cfg.input = c.input;
  if (!c.targets.empty()) {
    cfg.targets.clear();
    for (const auto& n : c.targets) {
      const auto t = signal::parse_target(n);
      require(t.has_value(), ErrorKind::kConfig, "unknown target '" + n + "'");
      cfg.targets.push_back(*t);
    }
  }
  if (c.subjects) cfg.synthetic.n_subjects = *c.subjects;
  if (c.trials) cfg.synthetic.trials_per_subject = *c.trials;
  if (c.effect) cfg.synthetic.effect_strength = *c.effect;
  if (c.subject_variance) cfg.synthetic.subject_variance = *c.subject_variance;
  if (c.iterations) cfg.loso.search_iterations = *c.iterations;
  require(!g.paper_mode || !c.iterations, ErrorKind::kConfig,
          "--iterations conflicts with --paper-mode");
  cfg.validate();
#ifdef _OPENMP
  if (cfg.loso.jobs > 0) omp_set_num_threads(cfg.loso.jobs);
#endif
  return cfg;
}

void require_file(const std::string& path, const char* flag) {
  require(!path.empty(), ErrorKind::kConfig, std::string(flag) + " is required");
  require(fs::is_regular_file(path), ErrorKind::kConfig, std::string(flag) + " " + path + " does not exist");
}

fs::path prepare_output(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  require(!ec && fs::is_directory(cfg.output), ErrorKind::kIo,
          "cannot create output directory " + cfg.output.string());
  return cfg.output;
}

std::vector<signal::Trial> load_trials(const RunConfig& cfg) {
  if (!cfg.input.empty()) return pipeline::ingest_dataset(cfg.input);
  return pipeline::generate_synthetic(cfg.synthetic);
}

// features.csv when given, else the full extraction from the configured source.
eval::Dataset load_features(const RunConfig& cfg, const std::string& features_csv) {
  if (!features_csv.empty()) return pipeline::read_features_csv(features_csv);
  Stopwatch sw;
  auto ex = pipeline::extract_features(load_trials(cfg), cfg.extraction);
  log("extracted " + std::to_string(ex.dataset.feature_names.size()) + " features from " +
      std::to_string(ex.dataset.rows()) + " trials in " + format_double(sw.seconds()) + " s");
  return std::move(ex.dataset);
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + p.string());
  out << body;
  out.close();
  require(!out.fail(), ErrorKind::kIo, "failed writing " + p.string());
}

void print_cv(const eval::CvReport& cv) {
  std::cout << signal::target_name(cv.target) << ": accuracy " << format_double(cv.accuracy.mean)
            << " (" << format_double(cv.accuracy.se) << "), f1 " << format_double(cv.f1.mean) << " ("
            << format_double(cv.f1.se) << ")";
  if (cv.failed_folds > 0) std::cout << ", " << cv.failed_folds << " failed folds";
  std::cout << '\n';
}

int cmd_synth(const RunConfig& cfg) {
  require(cfg.synthetic.duration_s == 60.0, ErrorKind::kConfig,
          "synth writes the 63 s DEAP layout; synthetic.duration_s must be 60");
  const auto trials = pipeline::generate_synthetic(cfg.synthetic);
  pipeline::write_dataset(prepare_output(cfg), trials);
  std::cout << "wrote " << trials.size() << " trials for " << cfg.synthetic.n_subjects
            << " subjects to " << cfg.output.string() << '\n';
  return 0;
}

int cmd_ingest_check(const RunConfig& cfg) {
  require(!cfg.input.empty(), ErrorKind::kConfig, "--input is required");
  const auto trials = pipeline::ingest_dataset(cfg.input);
  std::map<int, int> per_subject;
  for (const auto& t : trials) ++per_subject[t.subject_id];
  std::cout << "ok: " << per_subject.size() << " subjects, " << trials.size() << " trials, "
            << signal::kAllChannels.size() << " channels\n";
  return 0;
}

int cmd_extract(const RunConfig& cfg) {
  const eval::Dataset data = load_features(cfg, {});
  const fs::path out = prepare_output(cfg) / "features.csv";
  pipeline::write_features_csv(out, data);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg, const CommandOptions& c) {
  require(cfg.targets.size() == 1, ErrorKind::kConfig, "train needs exactly one --target");
  const eval::Dataset data = load_features(cfg, c.features);
  const auto target = cfg.targets.front();
  const gbdt::GbdtModel model = eval::fit_full(data, target, cfg.loso);
  const fs::path out = prepare_output(cfg) / ("model_" + std::string(signal::target_name(target)) + ".json");
  gbdt::save_model(model, out);
  std::cout << "wrote " << out.string() << " (" << model.active_trees().size() << " trees)\n";
  return 0;
}

pipeline::ReportInputs report_inputs(const RunConfig& cfg, const eval::Dataset& data) {
  pipeline::ReportInputs in;
  // Where the files go and how many threads ran never change the results.
  in.config = pipeline::run_config_to_json(cfg);
  in.config.erase("output");
  in.config.erase("jobs");
  in.data = &data;
  in.label_threshold = cfg.loso.label_threshold;
  return in;
}

// LOSO per target; `explain` adds held-out SHAP values, `select` the k-sweep.
int run_targets(const RunConfig& cfg, const std::string& features_csv, bool explain, bool interactions,
                bool select) {
  const eval::Dataset data = load_features(cfg, features_csv);
  auto in = report_inputs(cfg, data);
  for (const auto target : cfg.targets) {
    eval::LosoConfig lc = cfg.loso;
    lc.explain = explain;
    lc.explain_interactions = interactions;
    Stopwatch sw;
    pipeline::TargetResult r;
    r.cv = eval::run_loso(data, target, lc);
    if (explain) r.importance = shap::global_importance(r.cv.explanations, data.feature_names);
    if (select) r.selection = eval::run_selection(data, target, cfg.loso, &r.cv);
    print_cv(r.cv);
    if (r.selection) {
      std::cout << "  best k: " << r.selection->best_k_f1 << " by f1, " << r.selection->best_k_accuracy
                << " by accuracy\n";
    }
    log(std::string(signal::target_name(target)) + " done in " + format_double(sw.seconds()) + " s");
    in.targets.push_back(std::move(r));
  }
  const fs::path out = prepare_output(cfg);
  if (features_csv.empty()) pipeline::write_features_csv(out / "features.csv", data);
  for (const auto& p : pipeline::emit_report(in, out)) log("wrote " + p.string());
  return 0;
}

int cmd_explain(const RunConfig& cfg, const CommandOptions& c) {
  require_file(c.model, "--model");
  require(cfg.targets.size() == 1, ErrorKind::kConfig, "explain needs exactly one --target");
  const gbdt::GbdtModel model = gbdt::load_model(c.model);
  shap::check_explainable(model);
  const eval::Dataset data = load_features(cfg, c.features);
  require(data.feature_names == model.feature_names, ErrorKind::kSchemaMismatch,
          "feature columns do not match the model's feature names");
  const auto target = std::string(signal::target_name(cfg.targets.front()));
  const auto values = shap::shap_values(model, data.features);
  const auto ranking = shap::global_importance(values, data.feature_names);

  std::ostringstream sv;
  sv << "subject,trial,base_value";
  for (const auto& n : data.feature_names) sv << ',' << n;
  sv << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    sv << data.subjects[r] << ',' << data.trials[r] << ',' << format_double(values[r].base_value);
    for (double v : values[r].values) sv << ',' << format_double(v);
    sv << '\n';
  }
  std::ostringstream imp;
  imp << "target,rank,feature,mean_abs_shap\n";
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    imp << target << ',' << k + 1 << ',' << ranking[k].feature << ','
        << format_double(ranking[k].mean_abs_shap) << '\n';
  }
  std::optional<std::string> inter;
  if (c.interactions) {
    const auto mean = pipeline::mean_abs_interactions(shap::shap_interactions(model, data.features));
    std::ostringstream os;
    os << "target,feature_i,feature_j,mean_abs_interaction\n";
    const std::size_t top = std::min(pipeline::kInteractionTop, ranking.size());
    for (std::size_t a = 0; a < top; ++a) {
      for (std::size_t b = 0; b < top; ++b) {
        os << target << ',' << ranking[a].feature << ',' << ranking[b].feature << ','
           << format_double(mean(ranking[a].index, ranking[b].index)) << '\n';
      }
    }
    inter = os.str();
  }
  const fs::path out = prepare_output(cfg);
  write_text(out / "shap_values.csv", sv.str());
  write_text(out / "importance.csv", imp.str());
  if (inter) write_text(out / "interactions.csv", *inter);
  for (std::size_t k = 0; k < std::min<std::size_t>(5, ranking.size()); ++k) {
    std::cout << k + 1 << ". " << ranking[k].feature << " " << format_double(ranking[k].mean_abs_shap)
              << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affect recognition from peripheral physiology with tree explanations"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "seed for synthesis, search and training");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--jobs", g.jobs, "worker threads (default: PHYSIO_EXPLAIN_JOBS or all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--paper-mode", g.paper_mode, "pin every analysis parameter to the published values");

  CommandOptions c;
  auto targets = [&](CLI::App* sub) {
    sub->add_option("--target", c.targets, "valence, arousal or liking (repeatable)");
  };
  auto features = [&](CLI::App* sub) {
    sub->add_option("--features", c.features, "features.csv from `extract` (default: extract now)");
    sub->add_option("--input", c.input, "DEAP-layout dataset directory (default: synthetic)");
  };

  auto* synth = app.add_subcommand("synth", "write a synthetic DEAP-layout dataset");
  synth->add_option("--subjects", c.subjects, "number of subjects");
  synth->add_option("--trials", c.trials, "trials per subject");
  synth->add_option("--effect", c.effect, "planted effect strength in [0, 1]");
  synth->add_option("--subject-variance", c.subject_variance, "per-subject offset scale");

  auto* ingest = app.add_subcommand("ingest-check", "validate a DEAP-layout dataset");
  ingest->add_option("--input", c.input, "dataset directory");

  auto* extract = app.add_subcommand("extract", "preprocess, decompose and extract features");
  extract->add_option("--input", c.input, "DEAP-layout dataset directory (default: synthetic)");

  auto* train = app.add_subcommand("train", "fit one model on every row");
  features(train);
  targets(train);
  train->add_option("--iterations", c.iterations, "random-search iterations");

  auto* loso = app.add_subcommand("loso", "leave-one-subject-out evaluation");
  features(loso);
  targets(loso);
  loso->add_option("--iterations", c.iterations, "random-search iterations");

  auto* explain = app.add_subcommand("explain", "SHAP values of a saved model");
  explain->add_option("--model", c.model, "model JSON from `train`");
  features(explain);
  targets(explain);
  explain->add_flag("--interactions", c.interactions, "also write the top-10 interaction summary");

  auto* select = app.add_subcommand("select", "LOSO plus the feature-selection sweep");
  features(select);
  targets(select);
  select->add_option("--iterations", c.iterations, "random-search iterations");

  auto* report = app.add_subcommand("report", "full pipeline with every report file");
  features(report);
  targets(report);
  report->add_option("--iterations", c.iterations, "random-search iterations");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!c.features.empty()) require_file(c.features, "--features");
    const RunConfig cfg = resolve_config(g, c);
    if (synth->parsed()) return cmd_synth(cfg);
    if (ingest->parsed()) return cmd_ingest_check(cfg);
    if (extract->parsed()) return cmd_extract(cfg);
    if (train->parsed()) return cmd_train(cfg, c);
    if (loso->parsed()) return run_targets(cfg, c.features, false, false, false);
    if (explain->parsed()) return cmd_explain(cfg, c);
    if (select->parsed()) return run_targets(cfg, c.features, false, false, true);
    if (report->parsed()) return run_targets(cfg, c.features, true, true, true);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.is_validation() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
