#include "physio/pipeline/config.hpp"

#include <fstream>
#include <set>

#include "physio/error.hpp"
#include "physio/gbdt/serialize.hpp"

namespace physio::pipeline {

using nlohmann::json;
using signal::ChannelKind;

namespace {

// Typed access to one JSON object with dotted-path error messages.
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> known)
      : j_(j), path_(std::move(path)) {
    require(j.is_object(), ErrorKind::kConfig, where() + " must be an object");
    for (const auto& [key, value] : j.items()) {
      require(known.count(key) > 0, ErrorKind::kConfig, "unknown config key '" + dotted(key) + "'");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }
  std::string dotted(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void get(const std::string& key, T& field) const {
    if (!has(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::kConfig, "config key '" + dotted(key) + "' has the wrong type");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "config key '" + path_ + "'"; }

  const json& j_;
  std::string path_;
};

ChannelKind channel_key(const std::string& name, const std::string& path) {
  const auto c = signal::parse_channel(name);
  require(c.has_value(), ErrorKind::kConfig, "unknown channel '" + name + "' in " + path);
  return *c;
}

void read_synthetic(const Section& s, SyntheticSpec& spec) {
  s.get("n_subjects", spec.n_subjects);
  s.get("trials_per_subject", spec.trials_per_subject);
  s.get("effect_strength", spec.effect_strength);
  s.get("subject_variance", spec.subject_variance);
  s.get("seed", spec.seed);
  s.get("duration_s", spec.duration_s);
}

void read_preprocess(const Section& s, signal::PreprocessConfig& p) {
  if (s.has("smooth_span")) {
    const Section spans(s.at("smooth_span"), s.dotted("smooth_span"),
                        {"hEOG", "vEOG", "zEMG", "tEMG", "SCR", "PPG", "Resp", "Temp"});
    for (const auto& [name, value] : s.at("smooth_span").items()) {
      spans.get(name, p.smooth_span[channel_key(name, spans.dotted(name))]);
    }
  }
  if (s.has("detrend_exempt")) {
    std::vector<std::string> names;
    s.get("detrend_exempt", names);
    p.detrend_exempt.clear();
    for (const auto& n : names) p.detrend_exempt.insert(channel_key(n, s.dotted("detrend_exempt")));
  }
  s.get("tonic_window_s", p.tonic_window_s);
}

void read_ssa(const Section& s, ssa::SsaConfig& c) {
  s.get("window_len", c.window_len);
  if (!s.has("components")) return;
  const json& comps = s.at("components");
  const Section sec(comps, s.dotted("components"),
                    {"hEOG", "vEOG", "zEMG", "tEMG", "SCR", "PPG", "Resp", "Temp"});
  for (const auto& [name, value] : comps.items()) {
    const ChannelKind ch = channel_key(name, sec.dotted(name));
    if (value.is_string() && value.get<std::string>() == "auto") {
      c.kept_components[ch] = std::nullopt;
    } else {
      require(value.is_number_integer(), ErrorKind::kConfig,
              "config key '" + sec.dotted(name) + "' must be an integer or \"auto\"");
      c.kept_components[ch] = value.get<int>();
    }
  }
}

void read_entropy(const Section& s, features::EntropyConfig& e) {
  s.get("embedding_dim", e.embedding_dim);
  s.get("tolerance", e.tolerance);
  s.get("fuzzy_power", e.fuzzy_power);
  if (s.has("tolerance_mode")) {
    std::string mode;
    s.get("tolerance_mode", mode);
    if (mode == "absolute") {
      e.tolerance_mode = features::ToleranceMode::absolute;
    } else if (mode == "std_scaled") {
      e.tolerance_mode = features::ToleranceMode::std_scaled;
    } else {
      fail(ErrorKind::kConfig, "config key '" + s.dotted("tolerance_mode") +
                                   "' must be \"absolute\" or \"std_scaled\"");
    }
  }
}

template <typename Dim>
void read_range(const Section& s, const std::string& key, Dim& dim) {
  if (!s.has(key)) return;
  std::vector<decltype(dim.lo)> r;
  s.get(key, r);
  require(r.size() == 2, ErrorKind::kConfig, "config key '" + s.dotted(key) + "' must be [lo, hi]");
  dim.lo = r[0];
  dim.hi = r[1];
  if constexpr (requires { dim.choices; }) dim.choices.clear();
}

void read_search(const Section& s, eval::LosoConfig& l) {
  s.get("iterations", l.search_iterations);
  if (s.has("mode")) {
    std::string name;
    s.get("mode", name);
    const auto mode = eval::parse_search_mode(name);
    require(mode.has_value(), ErrorKind::kConfig,
            "config key '" + s.dotted("mode") + "' must be per_fold, global or fixed");
    l.mode = *mode;
  }
  if (s.has("space")) {
    const Section sp(s.at("space"), s.dotted("space"),
                     {"learning_rate", "feature_fraction", "num_leaves", "min_data_in_leaf",
                      "max_depth"});
    read_range(sp, "learning_rate", l.space.learning_rate);
    read_range(sp, "feature_fraction", l.space.feature_fraction);
    read_range(sp, "num_leaves", l.space.num_leaves);
    read_range(sp, "min_data_in_leaf", l.space.min_data_in_leaf);
    read_range(sp, "max_depth", l.space.max_depth);
  }
}

std::string mode_name(features::ToleranceMode m) {
  return m == features::ToleranceMode::absolute ? "absolute" : "std_scaled";
}

}  // namespace

void RunConfig::validate() const {
  try {
    if (input.empty()) synthetic.validate();
    require(!targets.empty(), ErrorKind::kConfig, "at least one target is required");
    std::set<signal::Target> seen(targets.begin(), targets.end());
    require(seen.size() == targets.size(), ErrorKind::kConfig, "targets must not repeat");
    require(!output.empty(), ErrorKind::kConfig, "output directory must not be empty");
    extraction.validate();
    loso.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) throw;
    fail(ErrorKind::kConfig, e.what());
  }
}

RunConfig run_config_from_json(const json& j, const RunConfig& base) {
  RunConfig c = base;
  const Section root(j, "",
                     {"input", "synthetic", "targets", "preprocess", "ssa", "entropy", "train",
                      "search", "label_threshold", "seed", "jobs", "output", "paper_mode"});
  std::string path = c.input.string();
  root.get("input", path);
  c.input = path;
  if (root.has("synthetic")) {
    read_synthetic(Section(root.at("synthetic"), "synthetic",
                           {"n_subjects", "trials_per_subject", "effect_strength",
                            "subject_variance", "seed", "duration_s"}),
                   c.synthetic);
  }
  if (root.has("targets")) {
    std::vector<std::string> names;
    root.get("targets", names);
    c.targets.clear();
    for (const auto& n : names) {
      const auto t = signal::parse_target(n);
      require(t.has_value(), ErrorKind::kConfig, "unknown target '" + n + "'");
      c.targets.push_back(*t);
    }
  }
  if (root.has("preprocess")) {
    read_preprocess(Section(root.at("preprocess"), "preprocess",
                            {"smooth_span", "detrend_exempt", "tonic_window_s"}),
                    c.extraction.preprocess);
  }
  if (root.has("ssa")) {
    read_ssa(Section(root.at("ssa"), "ssa", {"window_len", "components"}), c.extraction.ssa);
  }
  if (root.has("entropy")) {
    read_entropy(Section(root.at("entropy"), "entropy",
                         {"embedding_dim", "tolerance", "fuzzy_power", "tolerance_mode"}),
                 c.extraction.entropy);
  }
  if (root.has("train")) c.loso.base = gbdt::config_from_json(root.at("train"), c.loso.base);
  if (root.has("search")) {
    read_search(Section(root.at("search"), "search", {"iterations", "mode", "space"}), c.loso);
  }
  root.get("label_threshold", c.loso.label_threshold);
  root.get("seed", c.loso.seed);
  root.get("jobs", c.loso.jobs);
  std::string out = c.output.string();
  root.get("output", out);
  c.output = out;
  root.get("paper_mode", c.paper_mode);
  c.validate();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json spans = json::object();
  for (const auto& [ch, span] : c.extraction.preprocess.smooth_span) {
    spans[std::string(signal::channel_name(ch))] = span;
  }
  json exempt = json::array();
  for (ChannelKind ch : c.extraction.preprocess.detrend_exempt) {
    exempt.push_back(signal::channel_name(ch));
  }
  json comps = json::object();
  for (const auto& [ch, k] : c.extraction.ssa.kept_components) {
    comps[std::string(signal::channel_name(ch))] = k ? json(*k) : json("auto");
  }
  json targets = json::array();
  for (auto t : c.targets) targets.push_back(signal::target_name(t));
  const auto& sp = c.loso.space;
  const auto& e = c.extraction.entropy;
  const auto& s = c.synthetic;
  return json{
      {"input", c.input.string()},
      {"synthetic",
       {{"n_subjects", s.n_subjects},
        {"trials_per_subject", s.trials_per_subject},
        {"effect_strength", s.effect_strength},
        {"subject_variance", s.subject_variance},
        {"seed", s.seed},
        {"duration_s", s.duration_s}}},
      {"targets", targets},
      {"preprocess",
       {{"smooth_span", spans},
        {"detrend_exempt", exempt},
        {"tonic_window_s", c.extraction.preprocess.tonic_window_s}}},
      {"ssa", {{"window_len", c.extraction.ssa.window_len}, {"components", comps}}},
      {"entropy",
       {{"embedding_dim", e.embedding_dim},
        {"tolerance", e.tolerance},
        {"fuzzy_power", e.fuzzy_power},
        {"tolerance_mode", mode_name(e.tolerance_mode)}}},
      {"train", gbdt::config_to_json(c.loso.base)},
      {"search",
       {{"iterations", c.loso.search_iterations},
        {"mode", eval::search_mode_name(c.loso.mode)},
        {"space",
         {{"learning_rate", {sp.learning_rate.lo, sp.learning_rate.hi}},
          {"feature_fraction", {sp.feature_fraction.lo, sp.feature_fraction.hi}},
          {"num_leaves", {sp.num_leaves.lo, sp.num_leaves.hi}},
          {"min_data_in_leaf", {sp.min_data_in_leaf.lo, sp.min_data_in_leaf.hi}},
          {"max_depth", {sp.max_depth.lo, sp.max_depth.hi}}}}}},
      {"label_threshold", c.loso.label_threshold},
      {"seed", c.loso.seed},
      {"jobs", c.loso.jobs},
      {"output", c.output.string()},
      {"paper_mode", c.paper_mode}};
}

RunConfig load_run_config(const std::filesystem::path& file, const RunConfig& base) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorKind::kConfig, "cannot read config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, file.string() + ": " + e.what());
  }
  return run_config_from_json(j, base);
}

std::vector<std::string> apply_paper_mode(RunConfig& cfg) {
  const RunConfig paper;
  std::vector<std::string> changed;
  auto pin = [&](auto& field, const auto& value, const char* name) {
    if (!(field == value)) changed.emplace_back(name);
    field = value;
  };
  pin(cfg.extraction.preprocess.smooth_span, paper.extraction.preprocess.smooth_span,
      "preprocess.smooth_span");
  pin(cfg.extraction.preprocess.detrend_exempt, paper.extraction.preprocess.detrend_exempt,
      "preprocess.detrend_exempt");
  pin(cfg.extraction.preprocess.tonic_window_s, paper.extraction.preprocess.tonic_window_s,
      "preprocess.tonic_window_s");
  pin(cfg.extraction.ssa.window_len, paper.extraction.ssa.window_len, "ssa.window_len");
  pin(cfg.extraction.ssa.kept_components, paper.extraction.ssa.kept_components, "ssa.components");
  pin(cfg.extraction.entropy.embedding_dim, paper.extraction.entropy.embedding_dim,
      "entropy.embedding_dim");
  pin(cfg.extraction.entropy.tolerance, paper.extraction.entropy.tolerance, "entropy.tolerance");
  pin(cfg.extraction.entropy.fuzzy_power, paper.extraction.entropy.fuzzy_power,
      "entropy.fuzzy_power");
  pin(cfg.extraction.entropy.tolerance_mode, paper.extraction.entropy.tolerance_mode,
      "entropy.tolerance_mode");
  pin(cfg.loso.search_iterations, paper.loso.search_iterations, "search.iterations");
  pin(cfg.loso.base.max_rounds, paper.loso.base.max_rounds, "train.max_rounds");
  pin(cfg.loso.base.early_stop, paper.loso.base.early_stop, "train.early_stop");
  cfg.paper_mode = true;
  return changed;
}

}  // namespace physio::pipeline
