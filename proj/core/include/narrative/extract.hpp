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

#ifndef NARRATIVE_EXTRACT_HPP_
#define NARRATIVE_EXTRACT_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/coherence.hpp"
#include "narrative/corpus.hpp"

namespace narrative::extract {

enum class SolverBackend {
  // Threshold search over edge coherences with an exact length/coverage label
  // DP; lexicographic in (min coherence, total coherence, path keys).
  kCombinatorial,
  // The single-storyline MILP solved by branch and bound.
  kMilp,
};

std::string to_string(SolverBackend backend);
SolverBackend solver_backend_from_string(const std::string& name);

struct ExtractionParams {
  std::string source_id;
  std::string target_id;
  std::size_t k = 0;  // exact number of images on the route, endpoints included
  double mincover = 0.2;
  std::string space_name = std::string(corpus::kHighSpace);
  bool itf = false;
  // Permutes the key order used to break exact ties between routes.
  std::optional<std::uint64_t> tie_break_seed;
  double timeout_seconds = 60.0;
  SolverBackend backend = SolverBackend::kCombinatorial;
};

// ceil(mincover * total), robust to rounding in the product.
std::size_t required_clusters(double mincover, std::size_t total);

// Number of distinct effective categories over the corpus.
std::size_t total_clusters(const corpus::Corpus& corpus);

struct SolverStats {
  double wall_seconds = 0.0;
  std::size_t node_count = 0;  // nodes in the source..target interval
  std::size_t edge_count = 0;  // interval edges given to the solver
  bool optimal = false;
  std::string backend;
  std::size_t search_steps = 0;  // DP passes or branch-and-bound nodes
};

struct MapEdge {
  std::string source;
  std::string target;
  double coherence = 0.0;
  double raw_similarity = 0.0;
  double topic_similarity = 0.0;

  bool operator==(const MapEdge&) const = default;
};

struct NarrativeMap {
  ExtractionParams params;
  std::vector<std::string> nodes;
  std::vector<MapEdge> edges;
  std::vector<std::string> main_route;
  double mu_star = 0.0;
  double total_coherence = 0.0;
  std::vector<std::string> covered_clusters;
  std::size_t required_clusters = 0;
  std::size_t total_clusters = 0;
  SolverStats stats;
};

struct FeasibilityReport {
  std::size_t interval_nodes = 0;
  std::size_t max_path_length = 0;  // 0 when target is unreachable
  bool length_feasible = false;     // some route with exactly k images
  std::vector<std::string> attainable_categories;
  std::size_t required_clusters = 0;
  std::size_t total_clusters = 0;
  bool coverage_feasible = false;   // attainable categories suffice
  bool jointly_feasible = false;    // one route meets both at once
  bool feasible = false;
  std::string failed_constraint;    // "", "length" or "coverage"
};

// Throws Error(kValidation) for malformed parameters: unknown ids, k < 2,
// mincover outside [0, 1], source not strictly before target, space or
// weighting mismatch with the graph.
void validate_params(const coherence::CoherenceGraph& graph,
                     const corpus::Corpus& corpus,
                     const ExtractionParams& params);

FeasibilityReport check_feasibility(const coherence::CoherenceGraph& graph,
                                    const corpus::Corpus& corpus,
                                    const ExtractionParams& params);

// Maximizes the weakest route edge subject to exact length and coverage.
// Throws Error(kInfeasible) with the feasibility report as detail, or
// Error(kTimeout) carrying the best incumbent (flagged non-optimal).
NarrativeMap extract_map(const coherence::CoherenceGraph& graph,
                         const corpus::Corpus& corpus,
                         const ExtractionParams& params);

// Maximum-product source->target path over the map's own edges.
std::vector<std::string> extract_main_route(const NarrativeMap& map);

// Independent post-solve check of every map invariant; throws kInternal.
void verify_map(const NarrativeMap& map, const coherence::CoherenceGraph& graph,
                const corpus::Corpus& corpus);

nlohmann::json params_to_json(const ExtractionParams& params);
ExtractionParams params_from_json(const nlohmann::json& doc);
// Timing is left out by default so artifacts are reproducible byte for byte.
nlohmann::json map_to_json(const NarrativeMap& map, bool include_timing = false);
NarrativeMap map_from_json(const nlohmann::json& doc);
nlohmann::json feasibility_to_json(const FeasibilityReport& report);

}  // namespace narrative::extract

#endif  // NARRATIVE_EXTRACT_HPP_
