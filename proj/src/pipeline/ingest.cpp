#include "physio/pipeline/ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "physio/error.hpp"
#include "physio/util/format.hpp"

namespace physio::pipeline {

namespace fs = std::filesystem;
using signal::ChannelKind;

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? line.size() - start
                                                                       : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void ingest_fail(const fs::path& file, const std::string& what) {
  fail(ErrorKind::kIngestion, file.string() + ": " + what);
}

std::optional<int> parse_id(const std::string& name, const std::regex& pattern) {
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) return std::nullopt;
  int id = 0;
  const std::string digits = m[1].str();
  auto res = std::from_chars(digits.data(), digits.data() + digits.size(), id);
  if (res.ec != std::errc()) return std::nullopt;
  return id;
}

std::map<ChannelKind, std::vector<double>> read_signal_csv(const fs::path& file,
                                                           std::size_t expected_rows) {
  std::ifstream in(file);
  if (!in) ingest_fail(file, "cannot open");
  std::string line;
  if (!std::getline(in, line)) ingest_fail(file, "empty file");
  std::vector<ChannelKind> columns;
  for (std::string_view cell : split_csv(line)) {
    const auto c = signal::parse_channel(trim(cell));
    if (!c) ingest_fail(file, "unknown column '" + std::string(trim(cell)) + "' in header");
    if (std::find(columns.begin(), columns.end(), *c) != columns.end()) {
      ingest_fail(file, "duplicate column '" + std::string(signal::channel_name(*c)) + "'");
    }
    columns.push_back(*c);
  }
  for (ChannelKind c : signal::kAllChannels) {
    if (std::find(columns.begin(), columns.end(), c) == columns.end()) {
      ingest_fail(file, "missing channel '" + std::string(signal::channel_name(c)) + "'");
    }
  }

  std::map<ChannelKind, std::vector<double>> data;
  for (ChannelKind c : columns) data[c].reserve(expected_rows);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() != columns.size()) {
      ingest_fail(file, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(columns.size()));
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto v = parse_double(cells[k]);
      if (!v || !std::isfinite(*v)) {
        ingest_fail(file, "row " + std::to_string(row) + " column '" +
                              std::string(signal::channel_name(columns[k])) +
                              "': non-numeric value '" + std::string(trim(cells[k])) + "'");
      }
      data[columns[k]].push_back(*v);
    }
  }
  if (row != expected_rows) {
    ingest_fail(file, "has " + std::to_string(row) + " data rows, expected " +
                          std::to_string(expected_rows));
  }
  return data;
}

signal::Ratings read_labels(const fs::path& file) {
  std::ifstream in(file);
  if (!in) ingest_fail(file, "missing labels file");
  std::string header;
  std::string values;
  if (!std::getline(in, header) || !std::getline(in, values)) {
    ingest_fail(file, "labels file needs a header and one row");
  }
  const auto names = split_csv(header);
  const auto cells = split_csv(values);
  if (names.size() != cells.size()) ingest_fail(file, "labels header and row differ in width");
  std::map<std::string, double> parsed;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const std::string name(trim(names[k]));
    const auto v = parse_double(cells[k]);
    if (!v || !std::isfinite(*v)) {
      ingest_fail(file, "column '" + name + "': non-numeric value '" + std::string(trim(cells[k])) + "'");
    }
    parsed[name] = *v;
  }
  std::array<double, 3> v{};
  for (std::size_t k = 0; k < signal::kAllTargets.size(); ++k) {
    const std::string name(signal::target_name(signal::kAllTargets[k]));
    const auto it = parsed.find(name);
    if (it == parsed.end()) ingest_fail(file, "missing label column '" + name + "'");
    if (it->second < 1.0 || it->second > 9.0) {
      ingest_fail(file, "label '" + name + "' = " + format_double(it->second) + " outside [1, 9]");
    }
    v[k] = it->second;
  }
  return {v[0], v[1], v[2]};
}

}  // namespace

std::vector<signal::Trial> ingest_dataset(const fs::path& root, std::size_t expected_rows) {
  require(expected_rows > kBaselineRows, ErrorKind::kInvalidArgument,
          "expected rows must exceed the baseline length");
  if (!fs::is_directory(root)) fail(ErrorKind::kIngestion, root.string() + ": not a directory");
  static const std::regex subject_re("subject_(\\d+)");
  static const std::regex trial_re("trial_(\\d+)\\.csv");

  std::vector<std::tuple<int, int, fs::path>> files;
  for (const auto& sub : fs::directory_iterator(root)) {
    if (!sub.is_directory()) continue;
    const auto sid = parse_id(sub.path().filename().string(), subject_re);
    if (!sid) continue;
    for (const auto& f : fs::directory_iterator(sub.path())) {
      const auto tid = parse_id(f.path().filename().string(), trial_re);
      if (tid && f.is_regular_file()) files.emplace_back(*sid, *tid, f.path());
    }
  }
  if (files.empty()) fail(ErrorKind::kIngestion, root.string() + ": no subject_<id>/trial_<id>.csv files");
  std::sort(files.begin(), files.end());

  std::vector<signal::Trial> trials;
  trials.reserve(files.size());
  for (const auto& [sid, tid, path] : files) {
    auto data = read_signal_csv(path, expected_rows);
    signal::Trial trial;
    trial.subject_id = sid;
    trial.trial_id = tid;
    fs::path labels = path;
    labels.replace_extension(".labels.csv");
    trial.ratings = read_labels(labels);
    for (auto& [channel, x] : data) {
      std::vector<double> base(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(kBaselineRows));
      std::vector<double> stim(x.begin() + static_cast<std::ptrdiff_t>(kBaselineRows), x.end());
      trial.baselines.emplace(channel, signal::TimeSeries(std::move(base)));
      trial.channels.emplace(channel, signal::TimeSeries(std::move(stim)));
    }
    trials.push_back(std::move(trial));
  }
  return trials;
}

void write_dataset(const fs::path& root, const std::vector<signal::Trial>& trials) {
  std::error_code ec;
  fs::create_directories(root, ec);
  require(!ec, ErrorKind::kIo, "cannot create " + root.string() + ": " + ec.message());
  for (const signal::Trial& t : trials) {
    const fs::path dir = root / ("subject_" + std::to_string(t.subject_id));
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
    const fs::path file = dir / ("trial_" + std::to_string(t.trial_id) + ".csv");
    std::ofstream out(file);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + file.string());
    std::size_t n = 0;
    for (std::size_t k = 0; k < signal::kAllChannels.size(); ++k) {
      const ChannelKind c = signal::kAllChannels[k];
      out << (k ? "," : "") << signal::channel_name(c);
      const std::size_t len = t.baselines.at(c).size() + t.channel(c).size();
      require(k == 0 || len == n, ErrorKind::kInvalidArgument, "channels differ in length");
      n = len;
    }
    out << '\n';
    std::string row;
    for (std::size_t i = 0; i < n; ++i) {
      row.clear();
      for (std::size_t k = 0; k < signal::kAllChannels.size(); ++k) {
        const ChannelKind c = signal::kAllChannels[k];
        const auto& base = t.baselines.at(c);
        const double v = i < base.size() ? base[i] : t.channel(c)[i - base.size()];
        if (k) row += ',';
        row += format_double(v);
      }
      out << row << '\n';
    }
    require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + file.string());

    std::ofstream lab(dir / ("trial_" + std::to_string(t.trial_id) + ".labels.csv"));
    require(static_cast<bool>(lab), ErrorKind::kIo, "cannot write labels for " + file.string());
    lab << "valence,arousal,liking\n"
        << format_double(t.ratings.valence) << ',' << format_double(t.ratings.arousal) << ','
        << format_double(t.ratings.liking) << '\n';
  }
}

}  // namespace physio::pipeline
