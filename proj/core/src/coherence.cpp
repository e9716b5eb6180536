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

#include "narrative/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "narrative/error.hpp"

namespace narrative::coherence {
namespace {

using corpus::Corpus;
using nlohmann::json;

template <typename T>
double jsd_similarity(std::span<const T> p, std::span<const T> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::kValidation, "topic rows differ in length");
  }
  double divergence = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double a = p[k];
    const double b = q[k];
    const double m = 0.5 * (a + b);
    if (a > 0.0) divergence += 0.5 * a * std::log2(a / m);
    if (b > 0.0) divergence += 0.5 * b * std::log2(b / m);
  }
  return 1.0 - std::clamp(divergence, 0.0, 1.0);
}

std::size_t category_of(const Corpus& corpus, std::size_t record) {
  const auto& r = corpus.records[record];
  const auto& cat = r.effective_category();
  if (!cat) {
    throw Error(ErrorCode::kValidation,
                "record '" + r.id + "' has no effective category",
                {{"id", r.id}, {"reason", "missing_category"}});
  }
  return *corpus.category_index(*cat);
}

}  // namespace

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kValidation, "embedding dimension mismatch",
                {{"left", a.size()}, {"right", b.size()}});
  }
  double dot = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<double>(a[k]) * b[k];
  }
  return std::clamp(dot, -1.0, 1.0);
}

double topic_similarity(std::span<const float> p, std::span<const float> q) {
  return jsd_similarity(p, q);
}

double topic_similarity(std::span<const double> p, std::span<const double> q) {
  return jsd_similarity(p, q);
}

std::string to_string(CoherenceMode mode) {
  return mode == CoherenceMode::kGeometric ? "geometric" : "arithmetic";
}

CoherenceMode coherence_mode_from_string(const std::string& name) {
  if (name == "geometric") return CoherenceMode::kGeometric;
  if (name == "arithmetic") return CoherenceMode::kArithmetic;
  throw Error(ErrorCode::kValidation, "unknown coherence mode '" + name + "'",
              {{"field", "coherence_mode"}, {"value", name}});
}

double combine(double cosine, double topic, CoherenceMode mode) {
  const double s = std::max(0.0, cosine);
  const double t = std::clamp(topic, 0.0, 1.0);
  const double value =
      mode == CoherenceMode::kGeometric ? std::sqrt(s * t) : 0.5 * (s + t);
  return std::clamp(value, 0.0, 1.0);
}

double coherence(const Corpus& corpus, std::size_t u, std::size_t v,
                 const corpus::EmbeddingMatrix& emb, CoherenceMode mode) {
  if (!corpus.cluster_probs) {
    throw Error(ErrorCode::kValidation,
                "coherence needs propagated cluster probabilities",
                {{"reason", "not_propagated"}});
  }
  const auto& probs = *corpus.cluster_probs;
  return combine(cosine_similarity(emb.row(u), emb.row(v)),
                 topic_similarity(probs.row(u), probs.row(v)), mode);
}

std::vector<std::size_t> temporal_order(const Corpus& corpus) {
  std::vector<corpus::Date> dates(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus.records[i];
    const auto d = r.effective_date();
    if (!d) {
      throw Error(ErrorCode::kValidation,
                  "record '" + r.id + "' has no effective date",
                  {{"id", r.id}, {"reason", "missing_date"}});
    }
    dates[i] = *d;
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dates[a] != dates[b]) return dates[a] < dates[b];
    return corpus.records[a].id < corpus.records[b].id;
  });
  return order;
}

CoherenceGraph build_graph(const Corpus& corpus, const std::string& space,
                           const GraphParams& params) {
  if (corpus.size() == 0) {
    throw Error(ErrorCode::kValidation, "cannot build a graph over an empty corpus",
                {{"reason", "empty_corpus"}});
  }
  if (!corpus.cluster_probs) {
    throw Error(ErrorCode::kValidation,
                "graph construction needs propagated categories",
                {{"reason", "not_propagated"}});
  }
  if (params.top_k_out && *params.top_k_out == 0) {
    throw Error(ErrorCode::kValidation, "top_k_out must be positive",
                {{"field", "top_k_out"}});
  }
  if (params.window_days && *params.window_days <= 0) {
    throw Error(ErrorCode::kValidation, "window must be a positive day count",
                {{"field", "window"}});
  }
  const auto& emb = corpus.embedding(space);
  if (!emb.normalized) {
    throw Error(ErrorCode::kValidation,
                "embedding space '" + space + "' is not unit-normalized",
                {{"space", space}, {"reason", "not_normalized"}});
  }
  const auto& probs = *corpus.cluster_probs;

  CoherenceGraph g;
  g.space_name = space;
  g.node_order = temporal_order(corpus);
  const std::size_t n = g.node_order.size();
  g.rank.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) g.rank[g.node_order[pos]] = pos;

  std::vector<std::int64_t> day(n);
  for (std::size_t i = 0; i < n; ++i) {
    day[i] = corpus.day_offset(*corpus.records[i].effective_date());
  }

  auto make_edge = [&](std::size_t u, std::size_t v) {
    CoherenceEdge e;
    e.source = u;
    e.target = v;
    e.raw_similarity = cosine_similarity(emb.row(u), emb.row(v));
    e.topic_similarity = topic_similarity(probs.row(u), probs.row(v));
    e.coherence = combine(e.raw_similarity, e.topic_similarity, params.mode);
    return e;
  };

  std::vector<CoherenceEdge> candidates;
  for (std::size_t a = 0; a + 1 < n; ++a) {
    const std::size_t u = g.node_order[a];
    candidates.clear();
    for (std::size_t b = a + 1; b < n; ++b) {
      const std::size_t v = g.node_order[b];
      if (params.window_days && day[v] - day[u] > *params.window_days) break;
      candidates.push_back(make_edge(u, v));
    }
    // Highest coherence first; stable sort keeps earlier heads first on ties.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const CoherenceEdge& x, const CoherenceEdge& y) {
                       return x.coherence > y.coherence;
                     });
    if (params.top_k_out && candidates.size() > *params.top_k_out) {
      candidates.resize(*params.top_k_out);
    }
    const std::size_t successor = g.node_order[a + 1];
    if (params.successor_fallback &&
        std::none_of(candidates.begin(), candidates.end(),
                     [&](const CoherenceEdge& e) { return e.target == successor; })) {
      candidates.push_back(make_edge(u, successor));
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](const CoherenceEdge& x, const CoherenceEdge& y) {
                return g.rank[x.target] < g.rank[y.target];
              });
    g.edges.insert(g.edges.end(), candidates.begin(), candidates.end());
  }
  return g;
}

std::vector<double> itf_factors(const Corpus& corpus) {
  std::vector<std::size_t> counts(corpus.categories.size(), 0);
  for (std::size_t i = 0; i < corpus.size(); ++i) ++counts[category_of(corpus, i)];
  const double n = static_cast<double>(corpus.size());
  std::vector<double> raw(counts.size(), 0.0);
  double top = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) continue;
    raw[c] = std::log(1.0 + n / static_cast<double>(counts[c]));
    top = std::max(top, raw[c]);
  }
  if (top > 0.0) {
    for (double& r : raw) r /= top;
  }
  return raw;
}

CoherenceGraph apply_itf_weighting(CoherenceGraph graph, const Corpus& corpus) {
  const auto factors = itf_factors(corpus);
  for (auto& e : graph.edges) {
    e.coherence *= factors[category_of(corpus, e.target)];
  }
  graph.itf_applied = true;
  return graph;
}

json graph_to_json(const CoherenceGraph& graph, const Corpus& corpus) {
  json doc;
  doc["space"] = graph.space_name;
  doc["itf_applied"] = graph.itf_applied;
  doc["node_order"] = json::array();
  for (std::size_t i : graph.node_order) {
    doc["node_order"].push_back(corpus.records[i].id);
  }
  doc["edges"] = json::array();
  for (const auto& e : graph.edges) {
    doc["edges"].push_back({{"source", corpus.records[e.source].id},
                            {"target", corpus.records[e.target].id},
                            {"coherence", e.coherence},
                            {"raw_similarity", e.raw_similarity},
                            {"topic_similarity", e.topic_similarity}});
  }
  return doc;
}

CoherenceGraph graph_from_json(const json& doc, const Corpus& corpus) {
  CoherenceGraph g;
  try {
    g.space_name = doc.at("space").get<std::string>();
    g.itf_applied = doc.at("itf_applied").get<bool>();
    for (const auto& id : doc.at("node_order")) {
      g.node_order.push_back(corpus.index_of(id.get<std::string>()));
    }
    if (g.node_order.size() != corpus.size()) {
      throw Error(ErrorCode::kValidation,
                  "graph node_order does not cover the corpus",
                  {{"nodes", g.node_order.size()}, {"records", corpus.size()}});
    }
    g.rank.assign(corpus.size(), corpus.size());
    for (std::size_t pos = 0; pos < g.node_order.size(); ++pos) {
      g.rank[g.node_order[pos]] = pos;
    }
    for (const auto& e : doc.at("edges")) {
      CoherenceEdge edge;
      edge.source = corpus.index_of(e.at("source").get<std::string>());
      edge.target = corpus.index_of(e.at("target").get<std::string>());
      edge.coherence = e.at("coherence").get<double>();
      edge.raw_similarity = e.at("raw_similarity").get<double>();
      edge.topic_similarity = e.at("topic_similarity").get<double>();
      if (g.rank[edge.source] >= g.rank[edge.target]) {
        throw Error(ErrorCode::kValidation, "graph edge points backwards in time",
                    {{"source", corpus.records[edge.source].id},
                     {"target", corpus.records[edge.target].id}});
      }
      if (!(edge.coherence >= 0.0 && edge.coherence <= 1.0)) {
        throw Error(ErrorCode::kValidation, "edge coherence outside [0, 1]",
                    {{"source", corpus.records[edge.source].id},
                     {"target", corpus.records[edge.target].id}});
      }
      g.edges.push_back(edge);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation,
                std::string("malformed graph document: ") + e.what());
  }
  return g;
}

}  // namespace narrative::coherence
