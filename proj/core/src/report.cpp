// Copyright 2026 The Narrative Maps Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "narrative/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "narrative/error.hpp"

namespace narrative::evaluate {
namespace {

using nlohmann::json;

constexpr const char* kShuffleNote =
    "Each trial seeds the NM tie-break permutation among equal-coherence "
    "candidates and the RS draw; this stands in for reshuffling the dataset. "
    "Coherence is the mean pairwise coherence of consecutive timeline entries.";

std::string space_title(const std::string& space) {
  if (space == corpus::kHighSpace) return "High-Dim";
  if (space == corpus::kLowSpace) return "Low-Dim";
  return space;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string mean_sd(const Summary& s) {
  if (s.count == 0) return "n/a";
  return fixed(s.mean, 3) + " ± " + fixed(s.sd, 3);
}

std::string p_text(const std::optional<double>& p) {
  if (!p) return "n/a";
  char buf[32];
  if (*p < 1e-3) {
    std::snprintf(buf, sizeof buf, "%.1e", *p);
  } else {
    std::snprintf(buf, sizeof buf, "%.4f", *p);
  }
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const ExperimentCell* find_cell(const ExperimentReport& report, std::size_t length,
                                const std::string& space) {
  for (const auto& c : report.cells) {
    if (c.length == length && c.space == space) return &c;
  }
  return nullptr;
}

std::vector<std::size_t> row_lengths(const ExperimentReport& report) {
  std::vector<std::size_t> lengths;
  for (const auto& c : report.cells) {
    if (std::find(lengths.begin(), lengths.end(), c.length) == lengths.end()) {
      lengths.push_back(c.length);
    }
  }
  return lengths;
}

json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"count", s.count}};
}

Summary summary_from(const json& j) {
  return {j.at("mean").get<double>(), j.at("sd").get<double>(),
          j.at("count").get<std::size_t>()};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

const std::vector<std::string> kCsvColumns = {
    "length", "space", "trials", "failures",
    "nm_distance_mean", "nm_distance_sd", "nm_distance_count",
    "rs_distance_mean", "rs_distance_sd", "rs_distance_count", "p_distance",
    "nm_similarity_mean", "nm_similarity_sd", "nm_similarity_count",
    "rs_similarity_mean", "rs_similarity_sd", "rs_similarity_count", "p_similarity",
    "nm_coherence_mean", "nm_coherence_sd", "nm_coherence_count",
    "rs_coherence_mean", "rs_coherence_sd", "rs_coherence_count", "p_coherence"};

double parse_double(const std::string& field) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw Error(ErrorCode::kValidation, "bad numeric CSV field '" + field + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& field) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kValidation, "bad integer CSV field '" + field + "'");
  }
  return v;
}

}  // namespace

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "md" || name == "markdown") return ReportFormat::kMarkdown;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw Error(ErrorCode::kValidation, "unknown report format '" + name + "'",
              {{"field", "format"}, {"value", name}});
}

std::string render_markdown(const ExperimentReport& report) {
  const auto& spaces = report.config.spaces;
  std::ostringstream out;
  out << "| L |";
  for (const auto& space : spaces) {
    const std::string title = space_title(space);
    for (const char* metric : {"Similarity", "Distance"}) {
      out << ' ' << title << ' ' << metric << " NM | " << title << ' ' << metric
          << " RS | " << title << ' ' << metric << " p |";
    }
  }
  out << "\n|---|";
  for (std::size_t i = 0; i < spaces.size() * 6; ++i) out << "---|";
  out << '\n';
  if (report.cells.empty()) return out.str();

  const auto lengths = row_lengths(report);
  for (std::size_t length : lengths) {
    out << "| " << length << " |";
    for (const auto& space : spaces) {
      const ExperimentCell* c = find_cell(report, length, space);
      if (!c) {
        out << " n/a | n/a | n/a | n/a | n/a | n/a |";
        continue;
      }
      out << ' ' << mean_sd(c->nm_similarity) << " | " << mean_sd(c->rs_similarity) << " | "
          << p_text(c->p_similarity) << " | " << mean_sd(c->nm_distance) << " | "
          << mean_sd(c->rs_distance) << " | " << p_text(c->p_distance) << " |";
    }
    out << '\n';
  }

  out << "\n| L | Space | Coherence NM | Coherence RS | p | Trials | NM failures |\n"
      << "|---|---|---|---|---|---|---|\n";
  for (const auto& c : report.cells) {
    out << "| " << c.length << " | " << c.space << " | " << mean_sd(c.nm_coherence) << " | "
        << mean_sd(c.rs_coherence) << " | " << p_text(c.p_coherence) << " | " << c.trials
        << " | " << c.failures << " |\n";
  }
  bool any_failure = false;
  for (const auto& c : report.cells) any_failure = any_failure || !c.failure_reasons.empty();
  if (any_failure) {
    out << "\nFailed NM extractions:\n\n";
    for (const auto& c : report.cells) {
      for (const auto& r : c.failure_reasons) {
        out << "- L=" << c.length << ", " << c.space << ", " << r << '\n';
      }
    }
  }
  out << '\n' << kShuffleNote << "\n\nConfig: `" << config_to_json(report.config).dump()
      << "`\n";
  return out.str();
}

std::string render_csv(const ExperimentReport& report) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    out << (i ? "," : "") << kCsvColumns[i];
  }
  out << '\n';
  auto put = [&out](const Summary& s) {
    out << ',' << exact(s.mean) << ',' << exact(s.sd) << ',' << s.count;
  };
  auto put_p = [&out](const std::optional<double>& p) {
    out << ',';
    if (p) out << exact(*p);
  };
  for (const auto& c : report.cells) {
    out << c.length << ',' << c.space << ',' << c.trials << ',' << c.failures;
    put(c.nm_distance);
    put(c.rs_distance);
    put_p(c.p_distance);
    put(c.nm_similarity);
    put(c.rs_similarity);
    put_p(c.p_similarity);
    put(c.nm_coherence);
    put(c.rs_coherence);
    put_p(c.p_coherence);
    out << '\n';
  }
  return out.str();
}

std::vector<ExperimentCell> cells_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return {};
  std::vector<ExperimentCell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream row(line);
    while (std::getline(row, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != kCsvColumns.size()) {
      throw Error(ErrorCode::kValidation, "CSV row has the wrong number of fields",
                  {{"expected", kCsvColumns.size()}, {"actual", f.size()}});
    }
    ExperimentCell c;
    std::size_t i = 0;
    c.length = parse_size(f[i++]);
    c.space = f[i++];
    c.trials = parse_size(f[i++]);
    c.failures = parse_size(f[i++]);
    auto get = [&](Summary& s) {
      s.mean = parse_double(f[i++]);
      s.sd = parse_double(f[i++]);
      s.count = parse_size(f[i++]);
    };
    auto get_p = [&](std::optional<double>& p) {
      const std::string& v = f[i++];
      if (v.empty()) {
        p.reset();
      } else {
        p = parse_double(v);
      }
    };
    get(c.nm_distance);
    get(c.rs_distance);
    get_p(c.p_distance);
    get(c.nm_similarity);
    get(c.rs_similarity);
    get_p(c.p_similarity);
    get(c.nm_coherence);
    get(c.rs_coherence);
    get_p(c.p_coherence);
    cells.push_back(std::move(c));
  }
  return cells;
}

json report_to_json(const ExperimentReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"length", c.length},
                     {"space", c.space},
                     {"trials", c.trials},
                     {"failures", c.failures},
                     {"failure_reasons", c.failure_reasons},
                     {"nm_distance", summary_json(c.nm_distance)},
                     {"rs_distance", summary_json(c.rs_distance)},
                     {"p_distance", optional_json(c.p_distance)},
                     {"nm_similarity", summary_json(c.nm_similarity)},
                     {"rs_similarity", summary_json(c.rs_similarity)},
                     {"p_similarity", optional_json(c.p_similarity)},
                     {"nm_coherence", summary_json(c.nm_coherence)},
                     {"rs_coherence", summary_json(c.rs_coherence)},
                     {"p_coherence", optional_json(c.p_coherence)}});
  }
  return {{"config", config_to_json(report.config)}, {"note", kShuffleNote}, {"cells", cells}};
}

ExperimentReport report_from_json(const json& doc) {
  ExperimentReport report;
  try {
    report.config = config_from_json(doc.at("config"));
    for (const auto& j : doc.at("cells")) {
      ExperimentCell c;
      c.length = j.at("length").get<std::size_t>();
      c.space = j.at("space").get<std::string>();
      c.trials = j.at("trials").get<std::size_t>();
      c.failures = j.at("failures").get<std::size_t>();
      c.failure_reasons = j.value("failure_reasons", std::vector<std::string>{});
      c.nm_distance = summary_from(j.at("nm_distance"));
      c.rs_distance = summary_from(j.at("rs_distance"));
      c.p_distance = optional_from(j.at("p_distance"));
      c.nm_similarity = summary_from(j.at("nm_similarity"));
      c.rs_similarity = summary_from(j.at("rs_similarity"));
      c.p_similarity = optional_from(j.at("p_similarity"));
      c.nm_coherence = summary_from(j.at("nm_coherence"));
      c.rs_coherence = summary_from(j.at("rs_coherence"));
      c.p_coherence = optional_from(j.at("p_coherence"));
      report.cells.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string render_report(const ExperimentReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::kMarkdown:
      return render_markdown(report);
    case ReportFormat::kCsv:
      return render_csv(report);
    case ReportFormat::kJson:
      break;
  }
  return report_to_json(report).dump(2) + "\n";
}

}  // namespace narrative::evaluate
