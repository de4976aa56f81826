#include "physio/pipeline/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "physio/error.hpp"
#include "physio/gbdt/serialize.hpp"
#include "physio/util/format.hpp"

namespace physio::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json summary_json(const eval::Summary& s) { return json{{"mean", s.mean}, {"se", s.se}}; }

eval::Summary summary_from(const json& j) {
  return {j.at("mean").get<double>(), j.at("se").get<double>()};
}

json fold_json(const eval::FoldResult& f) {
  json j{{"subject", f.subject}, {"ok", f.ok}};
  if (f.ok) {
    j["accuracy"] = f.metrics.accuracy;
    j["f1"] = f.metrics.f1;
    j["best_iteration"] = f.best_iteration;
    j["test_rows"] = f.test_rows.size();
    j["config"] = gbdt::config_to_json(f.config);
  } else {
    j["failure"] = f.failure;
  }
  return j;
}

eval::FoldResult fold_from(const json& j) {
  eval::FoldResult f;
  f.subject = j.at("subject").get<int>();
  f.ok = j.at("ok").get<bool>();
  if (f.ok) {
    f.metrics.accuracy = j.at("accuracy").get<double>();
    f.metrics.f1 = j.at("f1").get<double>();
    f.best_iteration = j.at("best_iteration").get<int>();
    f.config = gbdt::config_from_json(j.at("config"));
  } else {
    f.failure = j.at("failure").get<std::string>();
  }
  return f;
}

json selection_json(const eval::SelectionReport& s) {
  json curve = json::array();
  for (std::size_t i = 0; i < s.ks.size(); ++i) {
    const auto& sc = s.scores[i];
    curve.push_back({{"k", s.ks[i]},
                     {"accuracy", sc.accuracy},
                     {"accuracy_se", sc.accuracy_se},
                     {"f1", sc.f1},
                     {"f1_se", sc.f1_se}});
  }
  return json{{"best_k_accuracy", s.best_k_accuracy},
              {"best_k_f1", s.best_k_f1},
              {"failed_folds", s.failed_folds},
              {"curve", curve}};
}

eval::SelectionReport selection_from(const json& j, signal::Target target) {
  eval::SelectionReport s;
  s.target = target;
  s.best_k_accuracy = j.at("best_k_accuracy").get<std::size_t>();
  s.best_k_f1 = j.at("best_k_f1").get<std::size_t>();
  s.failed_folds = j.at("failed_folds").get<int>();
  for (const json& p : j.at("curve")) {
    s.ks.push_back(p.at("k").get<std::size_t>());
    s.scores.push_back({p.at("accuracy").get<double>(), p.at("accuracy_se").get<double>(),
                        p.at("f1").get<double>(), p.at("f1_se").get<double>()});
  }
  return s;
}

class CsvFile {
 public:
  explicit CsvFile(fs::path path) : path_(std::move(path)), out_(path_) {
    require(static_cast<bool>(out_), ErrorKind::kIo, "cannot write " + path_.string());
  }
  std::ofstream& out() { return out_; }
  void close() {
    out_.close();
    require(!out_.fail(), ErrorKind::kIo, "failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

// Strongest partner of feature f by mean |phi_fj|, j != f; ties keep the lower index.
std::size_t strongest_interactor(const shap::InteractionMatrix& m, std::size_t f) {
  std::size_t best = f == 0 ? 1 : 0;
  for (std::size_t j = 0; j < m.n; ++j) {
    if (j != f && m(f, j) > m(f, best)) best = j;
  }
  return best;
}

}  // namespace

shap::InteractionMatrix mean_abs_interactions(const std::vector<shap::InteractionMatrix>& rows) {
  require(!rows.empty(), ErrorKind::kInvalidArgument, "no interaction matrices to average");
  shap::InteractionMatrix out{rows.front().n, std::vector<double>(rows.front().data.size(), 0.0)};
  for (const auto& m : rows) {
    require(m.n == out.n, ErrorKind::kInvalidArgument, "interaction matrices differ in size");
    for (std::size_t k = 0; k < m.data.size(); ++k) out.data[k] += std::abs(m.data[k]);
  }
  for (double& v : out.data) v /= static_cast<double>(rows.size());
  return out;
}

json report_to_json(const ReportInputs& in) {
  json targets = json::array();
  for (const auto& t : in.targets) {
    json folds = json::array();
    for (const auto& f : t.cv.folds) folds.push_back(fold_json(f));
    json importance = json::array();
    for (const auto& e : t.importance) {
      importance.push_back({{"feature", e.feature}, {"index", e.index}, {"mean_abs_shap", e.mean_abs_shap}});
    }
    json j{{"target", signal::target_name(t.cv.target)},
           {"mode", eval::search_mode_name(t.cv.mode)},
           {"accuracy", summary_json(t.cv.accuracy)},
           {"f1", summary_json(t.cv.f1)},
           {"failed_folds", t.cv.failed_folds},
           {"folds", folds},
           {"importance", importance}};
    if (t.selection) j["selection"] = selection_json(*t.selection);
    targets.push_back(std::move(j));
  }
  json doc{{"format", kReportFormat},
           {"version", kReportVersion},
           {"config", in.config},
           {"label_threshold", in.label_threshold},
           {"targets", targets}};
  if (in.data) {
    doc["features"] = in.data->feature_names;
    doc["rows"] = in.data->rows();
    doc["subjects"] = in.data->subject_ids().size();
  }
  return doc;
}

std::vector<TargetResult> report_targets_from_json(const json& j) {
  try {
    require(j.at("format").get<std::string>() == kReportFormat, ErrorKind::kSchemaMismatch,
            "not a physio report");
    require(j.at("version").get<int>() == kReportVersion, ErrorKind::kSchemaMismatch,
            "unsupported report version");
    std::vector<TargetResult> out;
    for (const json& t : j.at("targets")) {
      TargetResult r;
      const auto target = signal::parse_target(t.at("target").get<std::string>());
      const auto mode = eval::parse_search_mode(t.at("mode").get<std::string>());
      require(target && mode, ErrorKind::kSchemaMismatch, "bad target or mode in report");
      r.cv.target = *target;
      r.cv.mode = *mode;
      r.cv.accuracy = summary_from(t.at("accuracy"));
      r.cv.f1 = summary_from(t.at("f1"));
      r.cv.failed_folds = t.at("failed_folds").get<int>();
      for (const json& f : t.at("folds")) r.cv.folds.push_back(fold_from(f));
      for (const json& e : t.at("importance")) {
        r.importance.push_back({e.at("feature").get<std::string>(), e.at("index").get<std::size_t>(),
                                e.at("mean_abs_shap").get<double>()});
      }
      if (t.contains("selection")) r.selection = selection_from(t.at("selection"), *target);
      out.push_back(std::move(r));
    }
    return out;
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, std::string("report: ") + e.what());
  }
}

std::vector<fs::path> emit_report(const ReportInputs& in, const fs::path& out_dir) {
  require(!in.targets.empty(), ErrorKind::kIo, "refusing to write a report with no results");
  for (const auto& t : in.targets) {
    require(!t.cv.folds.empty(), ErrorKind::kIo,
            "refusing to write a report: " + std::string(signal::target_name(t.cv.target)) +
                " has no folds");
  }
  require(in.data != nullptr, ErrorKind::kIo, "refusing to write a report without its dataset");
  const eval::Dataset& data = *in.data;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec && fs::is_directory(out_dir), ErrorKind::kIo,
          "cannot create output directory " + out_dir.string());

  std::vector<fs::path> written;
  {
    const fs::path p = out_dir / "report.json";
    std::ofstream out(p);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + p.string());
    out << report_to_json(in).dump(1) << '\n';
    out.close();
    require(!out.fail(), ErrorKind::kIo, "failed writing " + p.string());
    written.push_back(p);
  }
  {
    CsvFile csv(out_dir / "predictions.csv");
    csv.out() << "target,subject,trial,label,probability,predicted\n";
    for (const auto& t : in.targets) {
      const auto y = data.labels(t.cv.target, in.label_threshold);
      for (const auto& f : t.cv.folds) {
        if (!f.ok) continue;
        for (std::size_t i = 0; i < f.test_rows.size(); ++i) {
          const std::size_t r = f.test_rows[i];
          csv.out() << signal::target_name(t.cv.target) << ',' << data.subjects[r] << ','
                    << data.trials[r] << ',' << y[r] << ',' << format_double(f.probabilities[i])
                    << ',' << f.predicted[i] << '\n';
        }
      }
    }
    csv.close();
    written.push_back(out_dir / "predictions.csv");
  }
  {
    CsvFile csv(out_dir / "importance.csv");
    csv.out() << "target,rank,feature,mean_abs_shap\n";
    for (const auto& t : in.targets) {
      for (std::size_t k = 0; k < t.importance.size(); ++k) {
        csv.out() << signal::target_name(t.cv.target) << ',' << k + 1 << ','
                  << t.importance[k].feature << ',' << format_double(t.importance[k].mean_abs_shap)
                  << '\n';
      }
    }
    csv.close();
    written.push_back(out_dir / "importance.csv");
  }

  const bool any_selection =
      std::any_of(in.targets.begin(), in.targets.end(), [](const auto& t) { return t.selection.has_value(); });
  if (any_selection) {
    CsvFile csv(out_dir / "selection_curve.csv");
    csv.out() << "target,k,accuracy,accuracy_se,f1,f1_se\n";
    for (const auto& t : in.targets) {
      if (!t.selection) continue;
      const auto& s = *t.selection;
      for (std::size_t i = 0; i < s.ks.size(); ++i) {
        csv.out() << signal::target_name(t.cv.target) << ',' << s.ks[i] << ','
                  << format_double(s.scores[i].accuracy) << ',' << format_double(s.scores[i].accuracy_se)
                  << ',' << format_double(s.scores[i].f1) << ',' << format_double(s.scores[i].f1_se)
                  << '\n';
      }
    }
    csv.close();
    written.push_back(out_dir / "selection_curve.csv");
  }

  // Interaction summaries per target, computed once for both files below.
  std::map<std::size_t, shap::InteractionMatrix> mean_inter;
  for (std::size_t ti = 0; ti < in.targets.size(); ++ti) {
    if (!in.targets[ti].cv.interactions.empty()) {
      mean_inter.emplace(ti, mean_abs_interactions(in.targets[ti].cv.interactions));
    }
  }
  if (!mean_inter.empty()) {
    CsvFile csv(out_dir / "interactions.csv");
    csv.out() << "target,feature_i,feature_j,mean_abs_interaction\n";
    for (const auto& [ti, m] : mean_inter) {
      const auto& t = in.targets[ti];
      const std::size_t top = std::min(kInteractionTop, t.importance.size());
      for (std::size_t a = 0; a < top; ++a) {
        for (std::size_t b = 0; b < top; ++b) {
          csv.out() << signal::target_name(t.cv.target) << ',' << t.importance[a].feature << ','
                    << t.importance[b].feature << ','
                    << format_double(m(t.importance[a].index, t.importance[b].index)) << '\n';
        }
      }
    }
    csv.close();
    written.push_back(out_dir / "interactions.csv");
  }

  // Dependence data for each target's leading features, one file per feature.
  std::map<std::string, std::ostringstream> effects;
  for (std::size_t ti = 0; ti < in.targets.size(); ++ti) {
    const auto& t = in.targets[ti];
    if (t.cv.explanations.empty()) continue;
    const auto it = mean_inter.find(ti);
    for (std::size_t k = 0; k < std::min(kEffectFeatures, t.importance.size()); ++k) {
      const std::size_t f = t.importance[k].index;
      const bool paired = it != mean_inter.end() && it->second.n > 1;
      const std::size_t partner = paired ? strongest_interactor(it->second, f) : 0;
      auto& os = effects[t.importance[k].feature];
      for (std::size_t e = 0; e < t.cv.explanations.size(); ++e) {
        const std::size_t r = t.cv.explained_rows[e];
        os << signal::target_name(t.cv.target) << ',' << format_double(data.features(r, f)) << ','
           << format_double(t.cv.explanations[e].values[f]) << ',';
        if (paired) {
          os << data.feature_names[partner] << ',' << format_double(data.features(r, partner));
        } else {
          os << ',';
        }
        os << '\n';
      }
    }
  }
  for (const auto& [feature, body] : effects) {
    const fs::path p = out_dir / ("effects_" + feature + ".csv");
    CsvFile csv(p);
    csv.out() << "target,feature_value,shap_value,interactor,interactor_value\n" << body.str();
    csv.close();
    written.push_back(p);
  }
  return written;
}

}  // namespace physio::pipeline
