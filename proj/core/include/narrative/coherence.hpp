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

#ifndef NARRATIVE_COHERENCE_HPP_
#define NARRATIVE_COHERENCE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/corpus.hpp"

namespace narrative::coherence {

// Dot product of two unit vectors, clamped to [-1, 1].
double cosine_similarity(std::span<const float> a, std::span<const float> b);

// 1 - JSD(p, q) with base-2 logs; 0 log 0 = 0. Result in [0, 1].
double topic_similarity(std::span<const float> p, std::span<const float> q);
double topic_similarity(std::span<const double> p, std::span<const double> q);

enum class CoherenceMode {
  kGeometric,   // sqrt(max(0, cos) * topic)
  kArithmetic,  // (max(0, cos) + topic) / 2
};

std::string to_string(CoherenceMode mode);
CoherenceMode coherence_mode_from_string(const std::string& name);

double combine(double cosine, double topic, CoherenceMode mode);

// Coherence between records u and v of a propagated corpus.
double coherence(const corpus::Corpus& corpus, std::size_t u, std::size_t v,
                 const corpus::EmbeddingMatrix& emb,
                 CoherenceMode mode = CoherenceMode::kGeometric);

struct CoherenceEdge {
  std::size_t source = 0;  // record index
  std::size_t target = 0;  // record index
  double coherence = 0.0;
  double raw_similarity = 0.0;
  double topic_similarity = 0.0;

  bool operator==(const CoherenceEdge&) const = default;
};

// Temporally ordered DAG. Every edge points forward in node_order; edges are
// sorted by (rank(source), rank(target)).
struct CoherenceGraph {
  std::vector<std::size_t> node_order;  // record indices
  std::vector<std::size_t> rank;        // record index -> position
  std::vector<CoherenceEdge> edges;
  std::string space_name;
  bool itf_applied = false;

  bool operator==(const CoherenceGraph&) const = default;
};

struct GraphParams {
  std::optional<int> window_days;       // unset: unbounded
  std::optional<std::size_t> top_k_out = 20;  // unset: keep all
  bool successor_fallback = true;
  CoherenceMode mode = CoherenceMode::kGeometric;
};

// Record indices sorted by (effective date, id). Throws if any record lacks
// an effective date.
std::vector<std::size_t> temporal_order(const corpus::Corpus& corpus);

CoherenceGraph build_graph(const corpus::Corpus& corpus,
                           const std::string& space,
                           const GraphParams& params = {});

// Per-category factor log(1 + n / count) normalized by its maximum; unused
// categories get 0. Indexed like corpus.categories.
std::vector<double> itf_factors(const corpus::Corpus& corpus);

// Multiplies each edge's coherence by the factor of its head's category.
CoherenceGraph apply_itf_weighting(CoherenceGraph graph,
                                   const corpus::Corpus& corpus);

nlohmann::json graph_to_json(const CoherenceGraph& graph,
                             const corpus::Corpus& corpus);
CoherenceGraph graph_from_json(const nlohmann::json& doc,
                               const corpus::Corpus& corpus);

}  // namespace narrative::coherence

#endif  // NARRATIVE_COHERENCE_HPP_
