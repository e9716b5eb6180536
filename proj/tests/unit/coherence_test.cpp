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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "narrative/coherence.hpp"
#include "narrative/error.hpp"

namespace narrative {
namespace {

using coherence::CoherenceMode;
using coherence::GraphParams;

// Corpus with random topic rows and shuffled dates.
corpus::Corpus topical_corpus(std::size_t n, std::size_t c, std::uint64_t seed,
                              bool uniform_counts = false) {
  Rng rng(seed);
  std::vector<std::size_t> cats(n);
  for (std::size_t i = 0; i < n; ++i) cats[i] = uniform_counts ? i % c : rng.below(c);
  auto corpus = testing::make_corpus(cats, c, 6, seed);
  Matrix<float> probs(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) total += probs(i, k) = static_cast<float>(rng.uniform());
    for (std::size_t k = 0; k < c; ++k) probs(i, k) = static_cast<float>(probs(i, k) / total);
    corpus.records[i].cluster_probs_row_index = i;
    corpus.records[i].expert_date =
        corpus::parse_iso_date("2020-01-01") + std::chrono::days(static_cast<int>(rng.below(20)));
  }
  corpus.cluster_probs = std::move(probs);
  return corpus;
}

TEST(TopicSimilarity, BoundsAndIdentity) {
  const std::vector<double> p{0.2, 0.8}, q{1.0, 0.0}, r{0.0, 1.0};
  EXPECT_DOUBLE_EQ(coherence::topic_similarity(std::span(p), std::span(p)), 1.0);
  EXPECT_NEAR(coherence::topic_similarity(std::span(q), std::span(r)), 0.0, 1e-15);
  const double pq = coherence::topic_similarity(std::span(p), std::span(q));
  EXPECT_DOUBLE_EQ(pq, coherence::topic_similarity(std::span(q), std::span(p)));
  EXPECT_GT(pq, 0.0);
  EXPECT_LT(pq, 1.0);
}

TEST(TopicSimilarity, KnownValue) {
  // JSD base 2 of (1,0) vs (1/2,1/2): 1/2 [log2(4/3)] + 1/2 [1/2 log2(2/3) + 1/2 log2(2)]
  const std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
  const double jsd = 0.5 * std::log2(4.0 / 3.0) + 0.25 * std::log2(2.0 / 3.0) + 0.25;
  EXPECT_NEAR(coherence::topic_similarity(std::span(p), std::span(q)), 1.0 - jsd, 1e-15);
}

TEST(Combine, Modes) {
  EXPECT_DOUBLE_EQ(coherence::combine(0.64, 0.25, CoherenceMode::kGeometric), 0.4);
  EXPECT_DOUBLE_EQ(coherence::combine(0.6, 0.2, CoherenceMode::kArithmetic), 0.4);
  EXPECT_DOUBLE_EQ(coherence::combine(-0.5, 0.9, CoherenceMode::kGeometric), 0.0);
  EXPECT_EQ(coherence::coherence_mode_from_string("arithmetic"), CoherenceMode::kArithmetic);
  EXPECT_THROW(coherence::coherence_mode_from_string("harmonic"), Error);
}

TEST(BuildGraph, TemporalDagWithValidEdges) {
  const auto c = topical_corpus(30, 3, 4);
  const auto g = coherence::build_graph(c, "high", {.top_k_out = 5});
  ASSERT_EQ(g.node_order.size(), 30u);
  for (std::size_t p = 1; p < 30; ++p) {
    const auto& a = c.records[g.node_order[p - 1]];
    const auto& b = c.records[g.node_order[p]];
    EXPECT_TRUE(*a.effective_date() < *b.effective_date() ||
                (*a.effective_date() == *b.effective_date() && a.id < b.id));
  }
  std::vector<std::size_t> out_degree(30, 0);
  for (const auto& e : g.edges) {
    EXPECT_LT(g.rank[e.source], g.rank[e.target]);
    EXPECT_GE(e.coherence, 0.0);
    EXPECT_LE(e.coherence, 1.0);
    EXPECT_DOUBLE_EQ(e.coherence, coherence::combine(e.raw_similarity, e.topic_similarity,
                                                     CoherenceMode::kGeometric));
    EXPECT_DOUBLE_EQ(e.coherence, coherence::coherence(c, e.target, e.source, c.embedding("high")));
    ++out_degree[e.source];
  }
  for (std::size_t p = 0; p + 1 < 30; ++p) {
    EXPECT_GE(out_degree[g.node_order[p]], 1u);
    EXPECT_LE(out_degree[g.node_order[p]], 6u);
  }
}

TEST(BuildGraph, UnprunedIsComplete) {
  const auto c = topical_corpus(12, 2, 5);
  const auto g = coherence::build_graph(c, "high", {.top_k_out = std::nullopt});
  EXPECT_EQ(g.edges.size(), 12u * 11u / 2u);
}

TEST(BuildGraph, WindowLimitsSpan) {
  const auto c = topical_corpus(40, 2, 6);
  const auto g = coherence::build_graph(
      c, "high", {.window_days = 3, .top_k_out = std::nullopt, .successor_fallback = false});
  for (const auto& e : g.edges) {
    EXPECT_LE(c.day_offset(*c.records[e.target].effective_date()) -
                  c.day_offset(*c.records[e.source].effective_date()),
              3);
  }
}

TEST(BuildGraph, NeedsPropagation) {
  auto c = testing::make_corpus({0, 1}, 2, 3, 0);
  EXPECT_THROW(coherence::build_graph(c, "high"), Error);
}

TEST(BuildGraph, JsonRoundTrip) {
  const auto c = topical_corpus(15, 3, 7);
  const auto g = coherence::build_graph(c, "high", {.top_k_out = 4});
  EXPECT_EQ(coherence::graph_from_json(coherence::graph_to_json(g, c), c), g);
}

TEST(Itf, NeverIncreasesCoherence) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = topical_corpus(25, 4, seed);
    const auto g = coherence::build_graph(c, "high", {.top_k_out = std::nullopt});
    const auto w = coherence::apply_itf_weighting(g, c);
    ASSERT_EQ(w.edges.size(), g.edges.size());
    EXPECT_TRUE(w.itf_applied);
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      EXPECT_LE(w.edges[i].coherence, g.edges[i].coherence);
      EXPECT_GE(w.edges[i].coherence, 0.0);
    }
  }
}

TEST(Itf, UniformCountsIsExactIdentity) {
  const auto c = topical_corpus(24, 4, 9, true);
  const auto g = coherence::build_graph(c, "high", {.top_k_out = std::nullopt});
  const auto w = coherence::apply_itf_weighting(g, c);
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    EXPECT_EQ(w.edges[i].coherence, g.edges[i].coherence);
  }
  for (double f : coherence::itf_factors(c)) EXPECT_EQ(f, 1.0);
}

TEST(Itf, RareCategoryKeepsFullWeight) {
  const auto c = topical_corpus(10, 2, 3);
  std::size_t rare = 0, count0 = 0;
  for (const auto& r : c.records) count0 += *r.effective_category() == "cat0";
  rare = count0 <= 5 ? 0 : 1;
  const auto f = coherence::itf_factors(c);
  EXPECT_EQ(f[rare], 1.0);
  const double n = 10.0, n0 = static_cast<double>(count0);
  const double expect = rare == 0 ? std::log(1 + n / (n - n0)) / std::log(1 + n / n0)
                                  : std::log(1 + n / n0) / std::log(1 + n / (n - n0));
  EXPECT_NEAR(f[1 - rare], expect, 1e-15);
}

}  // namespace
}  // namespace narrative
