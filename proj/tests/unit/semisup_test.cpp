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
#include "narrative/error.hpp"
#include "narrative/semisup.hpp"
#include "oracles.hpp"

namespace narrative {
namespace {

using semisup::LabelSeed;

LabelSeed random_seeds(std::size_t n, std::size_t c, Rng& rng) {
  LabelSeed seeds;
  for (std::size_t k = 0; k < c; ++k) seeds.class_names.push_back("c" + std::to_string(k));
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  rng.shuffle(rows);
  const std::size_t count = 1 + rng.below(std::max<std::size_t>(1, n / 2));
  for (std::size_t i = 0; i < count; ++i) seeds.seed_rows[rows[i]] = i < c ? i : rng.below(c);
  return seeds;
}

TEST(SpreadLabels, MatchesClosedForm) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(19);
    const std::size_t c = 1 + rng.below(4);
    const double alpha = 0.05 + 0.9 * rng.uniform();
    const auto g = testing::random_affinity(n, rng);
    const auto seeds = random_seeds(n, c, rng);
    const auto dist = semisup::spread_labels(g, seeds, alpha, 1e-13, 100000);
    ASSERT_TRUE(dist.converged);
    const auto expected = testing::closed_form_spread(g, seeds, alpha);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c; ++k)
        EXPECT_NEAR(dist.probs(i, k), expected(static_cast<long>(i), static_cast<long>(k)), 1e-8);
  }
}

TEST(SpreadLabels, RowsAreDistributions) {
  Rng rng(3);
  const auto g = testing::random_affinity(15, rng);
  const auto seeds = random_seeds(15, 3, rng);
  const auto dist = semisup::spread_labels(g, seeds, 0.9, 1e-9, 10000);
  for (std::size_t i = 0; i < 15; ++i) {
    double sum = 0.0;
    for (double v : dist.probs.row(i)) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(SpreadLabels, SingleClassIsUniformlyCertain) {
  Rng rng(5);
  const auto g = testing::random_affinity(10, rng);
  LabelSeed seeds{{"only"}, {{0, 0}, {4, 0}}};
  const auto dist = semisup::spread_labels(g, seeds, 0.5, 1e-10, 1000);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(dist.probs(i, 0), 1.0);
}

TEST(SpreadLabels, RejectsBadInputs) {
  Rng rng(1);
  const auto g = testing::random_affinity(5, rng);
  EXPECT_THROW(semisup::spread_labels(g, {{"a"}, {}}, 0.5, 1e-6, 10), Error);
  EXPECT_THROW(semisup::spread_labels(g, {{"a"}, {{9, 0}}}, 0.5, 1e-6, 10), Error);
  EXPECT_THROW(semisup::spread_labels(g, {{"a"}, {{0, 0}}}, 1.0, 1e-6, 10), Error);
  EXPECT_THROW(semisup::spread_labels(g, {{"a"}, {{0, 0}}}, 0.0, 1e-6, 10), Error);
  EXPECT_THROW(semisup::spread_labels(g, {{"a"}, {{0, 0}}}, 0.5, 0.0, 10), Error);
}

TEST(SpreadLabels, ReportsNonConvergence) {
  Rng rng(2);
  const auto g = testing::random_affinity(12, rng);
  const auto dist = semisup::spread_labels(g, {{"a", "b"}, {{0, 0}, {1, 1}}}, 0.99, 1e-15, 3);
  EXPECT_FALSE(dist.converged);
  EXPECT_EQ(dist.iterations, 3u);
}

TEST(BuildAffinity, SymmetricKnnUnion) {
  Rng rng(8);
  const std::size_t n = 25, d = 4, k = 3;
  Matrix<double> x(n, d);
  for (auto& v : x.data()) v = rng.normal();
  const auto g = semisup::build_affinity(x, k);
  EXPECT_GT(g.kernel_bandwidth, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_GE(g.adjacency[i].size(), k);
    EXPECT_TRUE(std::is_sorted(g.adjacency[i].begin(), g.adjacency[i].end()));
    for (const auto& [j, w] : g.adjacency[i]) {
      EXPECT_NE(i, j);
      EXPECT_GT(w, 0.0);
      EXPECT_LE(w, 1.0);
      EXPECT_DOUBLE_EQ(g.weight(j, i), w);
    }
  }
}

TEST(BuildAffinity, ExplicitSigmaUsesRbf) {
  Matrix<double> x(3, 1, std::vector<double>{0.0, 1.0, 3.0});
  const auto g = semisup::build_affinity(x, 1, 2.0);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), std::exp(-1.0 / 8.0));
  EXPECT_DOUBLE_EQ(g.weight(1, 2), std::exp(-4.0 / 8.0));
  EXPECT_DOUBLE_EQ(g.weight(0, 2), 0.0);
}

TEST(BuildAffinity, RejectsBadK) {
  Matrix<double> x(3, 1, std::vector<double>{0.0, 1.0, 3.0});
  EXPECT_THROW(semisup::build_affinity(x, 0), Error);
  EXPECT_THROW(semisup::build_affinity(x, 3), Error);
  EXPECT_THROW(semisup::build_affinity(x, 1, -1.0), Error);
}

TEST(Features, LocationOneHotAppended) {
  auto c = testing::make_corpus({0, 0, 1}, 2, 2, 1);
  c.locations = {"north", "south"};
  c.records[1].location_tag = "south";
  const auto f = semisup::build_augmented_features(c, c.embedding("high"), 0.5);
  ASSERT_EQ(f.cols(), 4u);
  EXPECT_EQ(f(0, 2), 0.0);
  EXPECT_EQ(f(0, 3), 0.0);
  EXPECT_EQ(f(1, 2), 0.0);
  EXPECT_EQ(f(1, 3), 0.5);
  EXPECT_DOUBLE_EQ(f(2, 0), static_cast<double>(c.embedding("high").values(2, 0)));
}

corpus::Corpus two_groups() {
  // Two tight, well-separated groups; each has a labeled member.
  auto c = testing::make_corpus({0, 0, 0, 0, 1, 1, 1, 1}, 2, 2, 0);
  auto& m = c.embeddings["high"].values;
  for (std::size_t i = 0; i < 8; ++i) {
    const double angle = (i < 4 ? 0.0 : 1.5) + 0.01 * static_cast<double>(i % 4);
    m(i, 0) = static_cast<float>(std::cos(angle));
    m(i, 1) = static_cast<float>(std::sin(angle));
  }
  for (std::size_t i : {1u, 2u, 3u, 5u, 6u, 7u}) {
    c.records[i].expert_category.reset();
    c.records[i].expert_date.reset();
  }
  c.records[0].expert_date = corpus::parse_iso_date("2020-01-01");
  c.records[4].expert_date = corpus::parse_iso_date("2020-03-01");
  return c;
}

TEST(Propagate, FillsCategoriesAndDates) {
  semisup::SpreadParams p;
  p.knn_k = 2;
  const auto out = semisup::propagate(two_groups(), p);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& r = out.corpus.records[i];
    EXPECT_EQ(*r.effective_category(), i < 4 ? "cat0" : "cat1") << i;
    ASSERT_TRUE(r.effective_date());
    EXPECT_EQ(r.cluster_probs_row_index, i);
  }
  EXPECT_LT(*out.corpus.records[1].effective_date(), *out.corpus.records[5].effective_date());
  EXPECT_EQ(out.corpus.records[0].propagated_date, out.corpus.records[0].expert_date);
  ASSERT_TRUE(out.corpus.cluster_probs);
  EXPECT_EQ(out.corpus.cluster_probs->cols(), 2u);
}

TEST(Propagate, PropagatedDatesLieWithinSeedRange) {
  semisup::SpreadParams p;
  p.knn_k = 3;
  const auto out = semisup::propagate(two_groups(), p);
  for (const auto& r : out.corpus.records) {
    EXPECT_GE(*r.effective_date(), corpus::parse_iso_date("2020-01-01"));
    EXPECT_LE(*r.effective_date(), corpus::parse_iso_date("2020-03-01"));
  }
}

TEST(Propagate, NeedsSeeds) {
  auto c = two_groups();
  for (auto& r : c.records) r.expert_category.reset();
  EXPECT_THROW(semisup::propagate_categories(c), Error);
  auto d = two_groups();
  d.records[4].expert_date = d.records[0].expert_date;
  EXPECT_THROW(semisup::propagate_dates(d, {.knn_k = 2}), Error);
}

}  // namespace
}  // namespace narrative
