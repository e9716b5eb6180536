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

#ifndef NARRATIVE_EXPERIMENT_HPP_
#define NARRATIVE_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/coherence.hpp"
#include "narrative/corpus.hpp"
#include "narrative/extract.hpp"

namespace narrative::evaluate {

enum class TimelineLabel { kNm, kRs, kBaseline };

std::string to_string(TimelineLabel label);

struct Timeline {
  std::vector<std::string> ids;
  TimelineLabel label = TimelineLabel::kBaseline;

  bool operator==(const Timeline&) const = default;
};

// Source, L - 2 uniformly drawn interior records sorted by temporal order,
// then target.
Timeline random_sample_timeline(const corpus::Corpus& corpus,
                                const std::string& source_id,
                                const std::string& target_id, std::size_t length,
                                std::uint64_t seed);

// Mean pairwise coherence of consecutive timeline entries, computed directly
// from the corpus rather than from graph edges.
double mean_edge_coherence(const corpus::Corpus& corpus,
                           const std::vector<std::string>& ids,
                           const std::string& space,
                           coherence::CoherenceMode mode);

// Accepts [{"length": L, "ids": [...]}, ...] or a bare list of id lists.
std::vector<Timeline> baselines_from_json(const nlohmann::json& doc);
nlohmann::json baselines_to_json(const std::vector<Timeline>& baselines);
std::vector<Timeline> load_baselines(const std::filesystem::path& path);

struct ExperimentConfig {
  std::size_t trials = 20;
  std::vector<std::size_t> lengths = {5, 10, 15, 20, 25, 30};
  std::vector<std::string> spaces = {std::string(corpus::kHighSpace),
                                     std::string(corpus::kLowSpace)};
  double mincover = 0.2;
  bool itf = false;
  std::uint64_t seed = 0;
  double timeout_seconds = 60.0;
  extract::SolverBackend backend = extract::SolverBackend::kCombinatorial;
  coherence::GraphParams graph;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;

  bool operator==(const Summary&) const = default;
};

Summary summarize(const std::vector<double>& values);

struct ExperimentCell {
  std::size_t length = 0;
  std::string space;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_reasons;
  Summary nm_distance, rs_distance;
  Summary nm_similarity, rs_similarity;
  Summary nm_coherence, rs_coherence;
  // Welch two-sided p-values; unset when either side has fewer than 2 values.
  std::optional<double> p_distance, p_similarity, p_coherence;

  bool operator==(const ExperimentCell&) const = default;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ExperimentCell> cells;  // ordered by (length, space order)
};

// Trial t seeds both the NM tie-break permutation and the RS draw, so each
// trial plays the role of one dataset shuffle.
ExperimentReport run_experiment(const corpus::Corpus& corpus,
                                const std::vector<Timeline>& baselines,
                                const ExperimentConfig& config);

}  // namespace narrative::evaluate

#endif  // NARRATIVE_EXPERIMENT_HPP_
