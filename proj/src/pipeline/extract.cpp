#include "physio/pipeline/extract.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#include "physio/error.hpp"
#include "physio/util/format.hpp"

namespace physio::pipeline {

namespace fs = std::filesystem;
using signal::ChannelKind;
using signal::Trial;

namespace {

const std::vector<std::string> kKeyColumns = {"subject", "trial", "valence", "arousal", "liking"};

std::string trial_label(const Trial& t) {
  return "subject " + std::to_string(t.subject_id) + " trial " + std::to_string(t.trial_id);
}

template <typename Fn>
void parallel_trials(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
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

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void ExtractionConfig::validate() const {
  preprocess.validate();
  ssa.validate();
  entropy.validate();
}

ComponentCounts resolve_components(const std::vector<Trial>& preprocessed, const ssa::SsaConfig& cfg) {
  cfg.validate();
  ComponentCounts counts;
  for (ChannelKind c : signal::kAllChannels) {
    const auto it = cfg.kept_components.find(c);
    require(it != cfg.kept_components.end(), ErrorKind::kConfig,
            "no SSA component count for " + std::string(signal::channel_name(c)));
    if (it->second) {
      counts[c] = *it->second;
      continue;
    }
    require(!preprocessed.empty(), ErrorKind::kInvalidArgument,
            "automatic component counts need at least one trial");
    std::vector<int> ranks(preprocessed.size());
    parallel_trials(preprocessed.size(), [&](std::size_t i) {
      const auto& ts = preprocessed[i].channel(c);
      const auto d = ssa::decompose(ts, cfg.window_len);
      const int k = static_cast<int>(ts.size()) - cfg.window_len + 1;
      ranks[i] = ssa::hard_threshold_rank(d.singular_values, cfg.window_len, k);
    });
    std::sort(ranks.begin(), ranks.end());
    counts[c] = std::clamp(ranks[(ranks.size() - 1) / 2], 1, cfg.window_len);
  }
  return counts;
}

features::FeatureSchema schema_for(const ComponentCounts& counts) {
  std::vector<features::ChannelGroup> groups;
  for (ChannelKind c : signal::kAllChannels) {
    const int k = counts.at(c);
    groups.push_back({features::feature_tag(c), c == ChannelKind::SCR ? k + 1 : k});
  }
  return features::FeatureSchema(std::move(groups));
}

features::ComponentMap trial_components(const Trial& preprocessed, const ComponentCounts& counts,
                                        int window_len) {
  features::ComponentMap out;
  for (ChannelKind c : signal::kAllChannels) {
    const int k = counts.at(c);
    const auto d = ssa::decompose(preprocessed.channel(c), window_len);
    require(static_cast<int>(d.components.size()) >= k, ErrorKind::kDegenerateSignal,
            std::string(signal::channel_name(c)) + " has SSA rank " +
                std::to_string(d.components.size()) + ", fewer than the " + std::to_string(k) +
                " components kept");
    auto& list = out[features::feature_tag(c)];
    list.assign(d.components.begin(), d.components.begin() + k);
    if (c == ChannelKind::SCR) {
      require(preprocessed.scr_tonic.has_value(), ErrorKind::kInvalidArgument,
              "SCR tonic level missing; trial was not preprocessed");
      list.push_back(*preprocessed.scr_tonic);
    }
  }
  return out;
}

Extraction extract_features(const std::vector<Trial>& trials, const ExtractionConfig& cfg) {
  cfg.validate();
  require(!trials.empty(), ErrorKind::kInvalidArgument, "no trials to extract");
  std::vector<std::optional<Trial>> pre(trials.size());
  parallel_trials(trials.size(), [&](std::size_t i) {
    pre[i] = signal::preprocess_trial(trials[i], cfg.preprocess);
  });
  std::vector<Trial> prepared;
  prepared.reserve(trials.size());
  for (auto& t : pre) prepared.push_back(std::move(*t));

  Extraction out;
  out.counts = resolve_components(prepared, cfg.ssa);
  const features::FeatureSchema schema = schema_for(out.counts);
  eval::Dataset& d = out.dataset;
  d.feature_names = schema.names();
  d.features = gbdt::Matrix(trials.size(), schema.size());
  parallel_trials(trials.size(), [&](std::size_t i) {
    try {
      const auto comps = trial_components(prepared[i], out.counts, cfg.ssa.window_len);
      const auto fv = features::extract_feature_vector(comps, cfg.entropy, schema);
      for (std::size_t j = 0; j < fv.values.size(); ++j) d.features(i, j) = fv.values[j];
    } catch (const Error& e) {
      throw Error(e.kind(), trial_label(trials[i]) + ": " + e.what());
    }
  });
  for (const Trial& t : trials) {
    d.subjects.push_back(t.subject_id);
    d.trials.push_back(t.trial_id);
    d.ratings.push_back(t.ratings);
  }
  return out;
}

void write_features_csv(const fs::path& file, const eval::Dataset& data) {
  require(data.rows() > 0, ErrorKind::kIo, "refusing to write an empty feature table");
  std::ofstream out(file);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + file.string());
  for (std::size_t k = 0; k < kKeyColumns.size(); ++k) out << (k ? "," : "") << kKeyColumns[k];
  for (const auto& n : data.feature_names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << data.subjects[r] << ',' << data.trials[r] << ',' << format_double(data.ratings[r].valence)
        << ',' << format_double(data.ratings[r].arousal) << ','
        << format_double(data.ratings[r].liking);
    for (std::size_t c = 0; c < data.features.cols(); ++c) out << ',' << format_double(data.features(r, c));
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + file.string());
}

eval::Dataset read_features_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::kIngestion, file.string() + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kIngestion, file.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);
  require(header.size() > kKeyColumns.size() &&
              std::equal(kKeyColumns.begin(), kKeyColumns.end(), header.begin()),
          ErrorKind::kSchemaMismatch,
          file.string() + ": header must start with subject,trial,valence,arousal,liking");
  eval::Dataset d;
  d.feature_names.assign(header.begin() + static_cast<std::ptrdiff_t>(kKeyColumns.size()), header.end());
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split_line(line);
    require(cells.size() == header.size(), ErrorKind::kIngestion,
            file.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                " cells, expected " + std::to_string(header.size()));
    std::vector<double> v(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto p = parse_double(cells[k]);
      require(p.has_value() && std::isfinite(*p), ErrorKind::kIngestion,
              file.string() + ": row " + std::to_string(row) + " column '" + header[k] +
                  "': non-numeric value '" + cells[k] + "'");
      v[k] = *p;
    }
    require(v[0] == std::floor(v[0]) && v[1] == std::floor(v[1]), ErrorKind::kIngestion,
            file.string() + ": row " + std::to_string(row) + " subject/trial must be integers");
    d.subjects.push_back(static_cast<int>(v[0]));
    d.trials.push_back(static_cast<int>(v[1]));
    d.ratings.push_back({v[2], v[3], v[4]});
    values.insert(values.end(), v.begin() + 5, v.end());
  }
  require(row > 0, ErrorKind::kIngestion, file.string() + ": no data rows");
  d.features = gbdt::Matrix(row, d.feature_names.size(), std::move(values));
  return d;
}

}  // namespace physio::pipeline
