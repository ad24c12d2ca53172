#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "holo/error.hpp"
#include "holo/inference.hpp"
#include "holo/io/config.hpp"
#include "holo/numeric_text.hpp"
#include "holo/summary.hpp"
#include "holo/tracking.hpp"
#include "holo/version.hpp"

/// Result persistence. A result document is the configuration echo plus
/// [result], [summary], [correlation], [trajectory] and [timing] sections;
/// it loads as a configuration, so a fit can be re-run from it directly.
namespace holo::io {

inline constexpr const char* kResultFile = "result.txt";
inline constexpr const char* kSamplesFile = "samples.tsv";
inline constexpr const char* kHistogramsFile = "histograms.tsv";
inline constexpr const char* kCorrelationFile = "correlation.tsv";
inline constexpr const char* kTrajectoryFile = "trajectory.tsv";

struct ResultDocument {
  ConfigDocument config;  // echo of the configuration sections
  std::vector<std::pair<std::string, std::string>> result;  // provenance, in write order
  std::optional<Summary> summary;
  std::vector<FrameResult> frames;  // tracking runs only
  std::optional<std::string> track_error;
  std::vector<std::pair<std::string, std::string>> timing;

  std::optional<std::string> result_value(const std::string& key) const {
    for (const auto& [k, v] : result) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

namespace detail {

inline std::string level_tag(double level) { return "ci" + std::to_string(std::lround(level * 100.0)); }

inline void encode_summary(ConfigDocument& doc, const std::string& section, const std::string& prefix,
                           const Summary& s) {
  std::string names;
  for (const auto& p : s.params) names += (names.empty() ? "" : " ") + p.name;
  doc.set(section, prefix + "params", names);
  doc.set(section, prefix + "samples", std::to_string(s.samples));
  doc.set(section, prefix + "map_log_posterior", format_double(s.map_log_posterior));
  doc.set(section, prefix + "mean_acceptance", format_double(s.mean_acceptance));
  for (const auto& p : s.params) {
    const std::string k = prefix + p.name + ".";
    doc.set(section, k + "mean", format_double(p.mean));
    doc.set(section, k + "std", format_double(p.std));
    doc.set(section, k + "median", format_double(p.median));
    doc.set(section, k + "map", format_double(p.map));
    doc.set(section, k + "autocorr_time", format_double(p.autocorr_time));
    for (const auto& ci : p.intervals) {
      doc.set(section, k + level_tag(ci.level), format_double(ci.lo) + " " + format_double(ci.hi));
    }
  }
}

inline Summary decode_summary(const ConfigDocument& doc, const std::string& section, const std::string& prefix) {
  auto need = [&](const std::string& key) {
    const auto v = doc.get(section, prefix + key);
    if (!v) throw ConfigError(doc.source() + ": result is missing [" + section + "] " + prefix + key);
    return *v;
  };
  auto num = [&](const std::string& key) { return parse_double(need(key), "[" + section + "] " + prefix + key); };
  Summary s;
  s.samples = static_cast<std::size_t>(parse_uint(need("samples"), "samples"));
  s.map_log_posterior = num("map_log_posterior");
  s.mean_acceptance = num("mean_acceptance");
  for (const auto& name : split_ws(need("params"))) {
    ParamSummary p;
    p.name = name;
    p.mean = num(name + ".mean");
    p.std = num(name + ".std");
    p.median = num(name + ".median");
    p.map = num(name + ".map");
    p.autocorr_time = num(name + ".autocorr_time");
    for (std::size_t l = 0; l < kCredibleLevels.size(); ++l) {
      const auto tok = split_ws(need(name + "." + level_tag(kCredibleLevels[l])));
      if (tok.size() != 2) throw ConfigError(doc.source() + ": credible interval needs 'lo hi'");
      p.intervals[l] = {kCredibleLevels[l], parse_double(tok[0], "interval"), parse_double(tok[1], "interval")};
    }
    s.params.push_back(std::move(p));
  }
  return s;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot write");
  out << text;
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace detail

inline ConfigDocument to_document(const ResultDocument& r) {
  ConfigDocument doc = r.config.only(config_sections());
  for (const auto& [k, v] : r.result) doc.set("result", k, v);
  if (r.summary) {
    detail::encode_summary(doc, "summary", "", *r.summary);
    const std::size_t d = r.summary->dim();
    for (std::size_t i = 0; i < d; ++i) {
      std::string row;
      for (std::size_t j = 0; j < d; ++j) row += (j ? " " : "") + format_double(r.summary->corr(i, j));
      doc.set("correlation", r.summary->params[i].name, row);
    }
  }
  if (!r.frames.empty() || r.track_error) {
    doc.set("trajectory", "frames", std::to_string(r.frames.size()));
    doc.set("trajectory", "complete", r.track_error ? "false" : "true");
    if (r.track_error) doc.set("trajectory", "error", *r.track_error);
    for (const auto& f : r.frames) {
      detail::encode_summary(doc, "trajectory", "frame." + std::to_string(f.frame) + ".", f.summary);
    }
  }
  for (const auto& [k, v] : r.timing) doc.set("timing", k, v);
  return doc;
}

inline ResultDocument from_document(const ConfigDocument& doc) {
  ResultDocument r;
  r.config = doc.only(config_sections());
  if (const auto* s = doc.find_section("result")) {
    for (const auto& e : s->entries) r.result.emplace_back(e.key, e.value);
  }
  if (doc.find_section("summary")) {
    auto s = detail::decode_summary(doc, "summary", "");
    const std::size_t d = s.dim();
    s.correlation.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = doc.get("correlation", s.params[i].name);
      if (!row) throw ConfigError(doc.source() + ": [correlation] has no row for '" + s.params[i].name + "'");
      const auto tok = split_ws(*row);
      if (tok.size() != d) throw ConfigError(doc.source() + ": [correlation] row '" + s.params[i].name + "' has wrong length");
      for (std::size_t j = 0; j < d; ++j) s.correlation[i * d + j] = parse_double(tok[j], "correlation");
    }
    r.summary = std::move(s);
  }
  if (doc.find_section("trajectory")) {
    const auto n = parse_uint(doc.get("trajectory", "frames").value_or("0"), "[trajectory] frames");
    for (std::size_t t = 0; t < n; ++t) {
      r.frames.push_back({t, detail::decode_summary(doc, "trajectory", "frame." + std::to_string(t) + ".")});
    }
    r.track_error = doc.get("trajectory", "error");
  }
  if (const auto* s = doc.find_section("timing")) {
    for (const auto& e : s->entries) r.timing.emplace_back(e.key, e.value);
  }
  return r;
}

/// Delimited sample table: header `walker step log_posterior <names...>`,
/// one row per retained sample, walker-major.
inline std::string samples_table(const SampleSet& s) {
  std::string out = "walker\tstep\tlog_posterior";
  for (const auto& n : s.names) out += "\t" + n;
  out += "\n";
  for (std::size_t w = 0; w < s.walkers; ++w) {
    for (std::size_t t = 0; t < s.steps; ++t) {
      out += std::to_string(w) + "\t" + std::to_string(t) + "\t" + format_double(s.log_post(w, t));
      for (std::size_t p = 0; p < s.dim(); ++p) out += "\t" + format_double(s.at(w, t, p));
      out += "\n";
    }
  }
  return out;
}

/// Reads a sample table back. Only the arrays are restored; strategy and
/// model provenance live in the result document.
inline SampleSet read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open sample table");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty sample table");
  auto split_tabs = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string tok;
    while (std::getline(ss, tok, '\t')) out.push_back(tok);
    return out;
  };
  const auto header = split_tabs(line);
  if (header.size() < 4 || header[0] != "walker" || header[1] != "step" || header[2] != "log_posterior") {
    throw IoError(path.string() + ": malformed sample table header");
  }
  SampleSet s;
  s.names.assign(header.begin() + 3, header.end());
  std::size_t row = 1, max_w = 0, max_t = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto tok = split_tabs(line);
    const std::string ctx = path.string() + ":" + std::to_string(row);
    if (tok.size() != header.size()) throw IoError(ctx + ": expected " + std::to_string(header.size()) + " columns");
    max_w = std::max<std::size_t>(max_w, parse_uint(tok[0], ctx));
    max_t = std::max<std::size_t>(max_t, parse_uint(tok[1], ctx));
    s.log_posterior.push_back(parse_double(tok[2], ctx));
    for (std::size_t p = 3; p < tok.size(); ++p) s.samples.push_back(parse_double(tok[p], ctx));
  }
  if (s.log_posterior.empty()) throw IoError(path.string() + ": sample table has no rows");
  s.walkers = max_w + 1;
  s.steps = max_t + 1;
  if (s.walkers * s.steps != s.log_posterior.size()) {
    throw IoError(path.string() + ": row count is not walkers x steps");
  }
  return s;
}

inline std::string histograms_table(const SampleSet& s, std::size_t bins = 30) {
  std::string out = "param\tbin\tlo\thi\tcount\n";
  for (std::size_t p = 0; p < s.dim(); ++p) {
    const auto h = marginal_histogram(s, p, bins);
    for (std::size_t b = 0; b < h.size(); ++b) {
      out += s.names[p] + "\t" + std::to_string(b) + "\t" + format_double(h[b].lo) + "\t" + format_double(h[b].hi) +
             "\t" + std::to_string(h[b].count) + "\n";
    }
  }
  return out;
}

inline std::string correlation_table(const Summary& s) {
  std::string out = "param";
  for (const auto& p : s.params) out += "\t" + p.name;
  out += "\n";
  for (std::size_t i = 0; i < s.dim(); ++i) {
    out += s.params[i].name;
    for (std::size_t j = 0; j < s.dim(); ++j) out += "\t" + format_double(s.corr(i, j));
    out += "\n";
  }
  return out;
}

inline std::string trajectory_table(const std::vector<FrameResult>& frames) {
  if (frames.empty()) return "frame\n";
  std::string out = "frame";
  for (const auto& p : frames[0].summary.params) out += "\t" + p.name + ".mean\t" + p.name + ".std";
  out += "\n";
  for (const auto& f : frames) {
    out += std::to_string(f.frame);
    for (const auto& p : f.summary.params) out += "\t" + format_double(p.mean) + "\t" + format_double(p.std);
    out += "\n";
  }
  return out;
}

/// Writes result.txt plus, when samples are given, the sample, histogram
/// and correlation tables into dir (created if needed).
inline void save_result(const ResultDocument& r, const SampleSet* samples, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": cannot create output directory (" + ec.message() + ")");
  if (samples) {
    detail::write_text(dir / kSamplesFile, samples_table(*samples));
    detail::write_text(dir / kHistogramsFile, histograms_table(*samples));
  }
  if (r.summary) detail::write_text(dir / kCorrelationFile, correlation_table(*r.summary));
  if (!r.frames.empty() || r.track_error) detail::write_text(dir / kTrajectoryFile, trajectory_table(r.frames));
  detail::write_text(dir / kResultFile, "# holo " + std::string(kVersion) + " result\n" + to_document(r).to_string());
}

/// Loads a result document from a file or from a directory holding
/// result.txt.
inline ResultDocument load_result(const std::filesystem::path& path) {
  const auto file = std::filesystem::is_directory(path) ? path / kResultFile : path;
  return from_document(ConfigDocument::load(file));
}

}  // namespace holo::io
