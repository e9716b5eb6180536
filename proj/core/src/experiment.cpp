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

#include "narrative/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <set>

#include "narrative/dtw.hpp"
#include "narrative/error.hpp"
#include "narrative/rng.hpp"
#include "narrative/stats.hpp"

namespace narrative::evaluate {
namespace {

using nlohmann::json;

void check_ids(const corpus::Corpus& corpus, const std::vector<std::string>& ids) {
  std::vector<std::string> unknown;
  for (const auto& id : ids) {
    if (!corpus.find(id)) unknown.push_back(id);
  }
  if (!unknown.empty()) {
    throw Error(ErrorCode::kValidation, "timeline references unknown ids",
                {{"unknown_ids", unknown}});
  }
}

struct TrialOutcome {
  bool nm_ok = false;
  std::string failure;
  double nm_distance = 0.0, nm_similarity = 0.0, nm_coherence = 0.0;
  double rs_distance = 0.0, rs_similarity = 0.0, rs_coherence = 0.0;
};

std::optional<double> welch_p(const std::vector<double>& xs,
                              const std::vector<double>& ys) {
  if (xs.size() < 2 || ys.size() < 2) return std::nullopt;
  return stats::welch_t_test(xs, ys).p;
}

json graph_params_to_json(const coherence::GraphParams& g) {
  return {{"window_days", g.window_days ? json(*g.window_days) : json(nullptr)},
          {"top_k_out", g.top_k_out ? json(*g.top_k_out) : json(nullptr)},
          {"successor_fallback", g.successor_fallback},
          {"mode", coherence::to_string(g.mode)}};
}

coherence::GraphParams graph_params_from_json(const json& doc) {
  coherence::GraphParams g;
  for (const auto& [key, value] : doc.items()) {
    if (key == "window_days") {
      g.window_days = value.is_null() ? std::nullopt : std::optional<int>(value.get<int>());
    } else if (key == "top_k_out") {
      g.top_k_out = value.is_null() ? std::nullopt
                                    : std::optional<std::size_t>(value.get<std::size_t>());
    } else if (key == "successor_fallback") {
      g.successor_fallback = value.get<bool>();
    } else if (key == "mode") {
      g.mode = coherence::coherence_mode_from_string(value.get<std::string>());
    } else {
      throw Error(ErrorCode::kValidation, "unknown graph field '" + key + "'",
                  {{"field", key}});
    }
  }
  return g;
}

}  // namespace

std::string to_string(TimelineLabel label) {
  switch (label) {
    case TimelineLabel::kNm:
      return "NM";
    case TimelineLabel::kRs:
      return "RS";
    case TimelineLabel::kBaseline:
      break;
  }
  return "BASELINE";
}

Timeline random_sample_timeline(const corpus::Corpus& corpus,
                                const std::string& source_id,
                                const std::string& target_id, std::size_t length,
                                std::uint64_t seed) {
  if (length < 2) {
    throw Error(ErrorCode::kValidation, "timeline length must be at least 2",
                {{"length", length}});
  }
  const std::size_t s = corpus.index_of(source_id);
  const std::size_t t = corpus.index_of(target_id);
  const auto order = coherence::temporal_order(corpus);
  std::vector<std::size_t> rank(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  if (rank[s] >= rank[t]) {
    throw Error(ErrorCode::kValidation,
                "source must come strictly before target in temporal order",
                {{"source", source_id}, {"target", target_id}});
  }
  std::vector<std::size_t> interior(order.begin() + static_cast<std::ptrdiff_t>(rank[s]) + 1,
                                    order.begin() + static_cast<std::ptrdiff_t>(rank[t]));
  if (interior.size() < length - 2) {
    throw Error(ErrorCode::kValidation, "not enough records between source and target",
                {{"available", interior.size()}, {"needed", length - 2}});
  }
  Rng rng(seed);
  rng.shuffle(interior);
  interior.resize(length - 2);
  std::sort(interior.begin(), interior.end(),
            [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
  Timeline out;
  out.label = TimelineLabel::kRs;
  out.ids.push_back(source_id);
  for (std::size_t r : interior) out.ids.push_back(corpus.records[r].id);
  out.ids.push_back(target_id);
  return out;
}

double mean_edge_coherence(const corpus::Corpus& corpus,
                           const std::vector<std::string>& ids,
                           const std::string& space,
                           coherence::CoherenceMode mode) {
  if (ids.size() < 2) return 0.0;
  const auto& emb = corpus.embedding(space);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    total += coherence::coherence(corpus, corpus.index_of(ids[i]),
                                  corpus.index_of(ids[i + 1]), emb, mode);
  }
  return total / static_cast<double>(ids.size() - 1);
}

std::vector<Timeline> baselines_from_json(const json& doc) {
  if (!doc.is_array()) {
    throw Error(ErrorCode::kValidation, "baselines must be a JSON array");
  }
  std::vector<Timeline> out;
  try {
    for (const auto& entry : doc) {
      Timeline t;
      if (entry.is_array()) {
        t.ids = entry.get<std::vector<std::string>>();
      } else {
        for (const auto& [key, value] : entry.items()) {
          if (key != "ids" && key != "length") {
            throw Error(ErrorCode::kValidation, "unknown baseline field '" + key + "'",
                        {{"field", key}});
          }
        }
        t.ids = entry.at("ids").get<std::vector<std::string>>();
        if (entry.contains("length") && entry["length"].get<std::size_t>() != t.ids.size()) {
          throw Error(ErrorCode::kValidation, "baseline length does not match its ids",
                      {{"length", entry["length"]}, {"ids", t.ids.size()}});
        }
      }
      if (t.ids.size() < 2) {
        throw Error(ErrorCode::kValidation, "baseline needs at least 2 ids");
      }
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed baselines: ") + e.what());
  }
  return out;
}

json baselines_to_json(const std::vector<Timeline>& baselines) {
  json out = json::array();
  for (const auto& b : baselines) out.push_back({{"length", b.ids.size()}, {"ids", b.ids}});
  return out;
}

std::vector<Timeline> load_baselines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open baselines file", {{"path", path.string()}});
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kValidation, "baselines file is not valid JSON",
                {{"path", path.string()}});
  }
  return baselines_from_json(doc);
}

json config_to_json(const ExperimentConfig& c) {
  return {{"trials", c.trials},
          {"lengths", c.lengths},
          {"spaces", c.spaces},
          {"mincover", c.mincover},
          {"itf", c.itf},
          {"seed", c.seed},
          {"timeout_seconds", c.timeout_seconds},
          {"solver", extract::to_string(c.backend)},
          {"graph", graph_params_to_json(c.graph)}};
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "trials") {
        c.trials = value.get<std::size_t>();
      } else if (key == "lengths") {
        c.lengths = value.get<std::vector<std::size_t>>();
      } else if (key == "spaces") {
        c.spaces = value.get<std::vector<std::string>>();
      } else if (key == "mincover") {
        c.mincover = value.get<double>();
      } else if (key == "itf") {
        c.itf = value.get<bool>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "timeout_seconds") {
        c.timeout_seconds = value.get<double>();
      } else if (key == "solver") {
        c.backend = extract::solver_backend_from_string(value.get<std::string>());
      } else if (key == "graph") {
        c.graph = graph_params_from_json(value);
      } else {
        throw Error(ErrorCode::kValidation, "unknown experiment field '" + key + "'",
                    {{"field", key}});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

Summary summarize(const std::vector<double>& values) {
  return {stats::mean(values), stats::sample_sd(values), values.size()};
}

ExperimentReport run_experiment(const corpus::Corpus& corpus,
                                const std::vector<Timeline>& baselines,
                                const ExperimentConfig& config) {
  if (config.trials == 0) {
    throw Error(ErrorCode::kValidation, "trials must be positive", {{"field", "trials"}});
  }
  std::vector<const Timeline*> chosen;
  for (std::size_t length : config.lengths) {
    auto it = std::find_if(baselines.begin(), baselines.end(),
                           [&](const Timeline& b) { return b.ids.size() == length; });
    if (it == baselines.end()) {
      throw Error(ErrorCode::kValidation, "no baseline timeline of the requested length",
                  {{"length", length}});
    }
    check_ids(corpus, it->ids);
    chosen.push_back(&*it);
  }
  std::vector<coherence::CoherenceGraph> graphs;
  for (const auto& space : config.spaces) {
    corpus.embedding(space);
    graphs.push_back(coherence::build_graph(corpus, space, config.graph));
  }

  ExperimentReport report;
  report.config = config;
  for (std::size_t li = 0; li < config.lengths.size(); ++li) {
    const std::size_t length = config.lengths[li];
    const Timeline& baseline = *chosen[li];
    for (std::size_t si = 0; si < config.spaces.size(); ++si) {
      const std::string& space = config.spaces[si];
      const auto baseline_seq = sequence_of(corpus, baseline.ids, space);

      auto run_trial = [&, length](std::size_t trial) {
        TrialOutcome out;
        const std::uint64_t trial_seed = mix_seed(mix_seed(config.seed, length), trial);
        extract::ExtractionParams params;
        params.source_id = baseline.ids.front();
        params.target_id = baseline.ids.back();
        params.k = length;
        params.mincover = config.mincover;
        params.space_name = space;
        params.itf = config.itf;
        params.tie_break_seed = trial_seed;
        params.timeout_seconds = config.timeout_seconds;
        params.backend = config.backend;
        try {
          const auto map = extract::extract_map(graphs[si], corpus, params);
          const auto alignment = dtw(sequence_of(corpus, map.main_route, space), baseline_seq);
          out.nm_ok = true;
          out.nm_distance = alignment.distance;
          out.nm_similarity = alignment.mean_similarity;
          out.nm_coherence = mean_edge_coherence(corpus, map.main_route, space, config.graph.mode);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kInfeasible && e.code() != ErrorCode::kTimeout) throw;
          out.failure = "trial " + std::to_string(trial) + ": " + std::string(to_string(e.code())) +
                        ": " + e.what();
        }
        const Timeline rs = random_sample_timeline(corpus, params.source_id, params.target_id,
                                                   length, mix_seed(trial_seed, 1));
        const auto alignment = dtw(sequence_of(corpus, rs.ids, space), baseline_seq);
        out.rs_distance = alignment.distance;
        out.rs_similarity = alignment.mean_similarity;
        out.rs_coherence = mean_edge_coherence(corpus, rs.ids, space, config.graph.mode);
        return out;
      };

      std::vector<std::future<TrialOutcome>> pending;
      for (std::size_t trial = 0; trial < config.trials; ++trial) {
        pending.push_back(std::async(std::launch::async, run_trial, trial));
      }
      // Reduce in trial order so the result does not depend on scheduling.
      ExperimentCell cell;
      cell.length = length;
      cell.space = space;
      cell.trials = config.trials;
      std::vector<double> nm_d, nm_s, nm_c, rs_d, rs_s, rs_c;
      for (auto& f : pending) {
        const TrialOutcome o = f.get();
        if (o.nm_ok) {
          nm_d.push_back(o.nm_distance);
          nm_s.push_back(o.nm_similarity);
          nm_c.push_back(o.nm_coherence);
        } else {
          ++cell.failures;
          cell.failure_reasons.push_back(o.failure);
        }
        rs_d.push_back(o.rs_distance);
        rs_s.push_back(o.rs_similarity);
        rs_c.push_back(o.rs_coherence);
      }
      cell.nm_distance = summarize(nm_d);
      cell.rs_distance = summarize(rs_d);
      cell.nm_similarity = summarize(nm_s);
      cell.rs_similarity = summarize(rs_s);
      cell.nm_coherence = summarize(nm_c);
      cell.rs_coherence = summarize(rs_c);
      cell.p_distance = welch_p(nm_d, rs_d);
      cell.p_similarity = welch_p(nm_s, rs_s);
      cell.p_coherence = welch_p(nm_c, rs_c);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace narrative::evaluate
