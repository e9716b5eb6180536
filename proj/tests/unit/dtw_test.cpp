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
#include "narrative/dtw.hpp"
#include "narrative/error.hpp"
#include "oracles.hpp"

namespace narrative::evaluate {
namespace {

using Rows = std::vector<std::vector<float>>;

EmbeddingSequence view(const Rows& rows) {
  EmbeddingSequence s;
  for (const auto& r : rows) s.emplace_back(r);
  return s;
}

Rows random_rows(Rng& rng, std::size_t len, std::size_t d) {
  Rows rows;
  for (std::size_t i = 0; i < len; ++i) rows.push_back(testing::random_unit(rng, d));
  return rows;
}

TEST(Dtw, MatchesExhaustivePathEnumeration) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 1 + rng.below(8);
    const auto a = random_rows(rng, 1 + rng.below(6), d);
    const auto b = random_rows(rng, 1 + rng.below(6), d);
    const auto alignment = dtw(view(a), view(b));
    EXPECT_NEAR(alignment.distance, testing::brute_force_dtw(view(a), view(b)), 1e-12);
  }
}

TEST(Dtw, PathIsMonotoneAndAttainsDistance) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_rows(rng, 1 + rng.below(9), 5);
    const auto b = random_rows(rng, 1 + rng.below(9), 5);
    const auto al = dtw(view(a), view(b));
    ASSERT_FALSE(al.path.empty());
    EXPECT_EQ(al.path.front(), std::make_pair(std::size_t{0}, std::size_t{0}));
    EXPECT_EQ(al.path.back(), std::make_pair(a.size() - 1, b.size() - 1));
    double cost = 0.0, sim = 0.0;
    for (std::size_t k = 0; k < al.path.size(); ++k) {
      const auto [i, j] = al.path[k];
      const double c = testing::oracle_cosine(a[i], b[j]);
      cost += 1.0 - c;
      sim += c;
      if (k == 0) continue;
      const auto [pi, pj] = al.path[k - 1];
      EXPECT_TRUE((i == pi + 1 && j == pj + 1) || (i == pi + 1 && j == pj) ||
                  (i == pi && j == pj + 1));
    }
    EXPECT_NEAR(cost, al.distance, 1e-12);
    EXPECT_NEAR(sim / static_cast<double>(al.path.size()), al.mean_similarity, 1e-12);
    EXPECT_NEAR(mean_path_similarity(al, view(a), view(b)), al.mean_similarity, 1e-12);
  }
}

TEST(Dtw, SymmetricDistance) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_rows(rng, 1 + rng.below(7), 3);
    const auto b = random_rows(rng, 1 + rng.below(7), 3);
    EXPECT_NEAR(dtw(view(a), view(b)).distance, dtw(view(b), view(a)).distance, 1e-12);
  }
}

TEST(Dtw, IdenticalSequencesAlignDiagonally) {
  Rng rng(5);
  const auto a = random_rows(rng, 6, 4);
  const auto al = dtw(view(a), view(a));
  EXPECT_NEAR(al.distance, 0.0, 1e-12);
  EXPECT_NEAR(al.mean_similarity, 1.0, 1e-12);
  ASSERT_EQ(al.path.size(), 6u);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(al.path[k], std::make_pair(k, k));
}

TEST(Dtw, TiesPreferDiagonalThenRowStep) {
  const Rows a{{1, 0}, {1, 0}, {1, 0}};
  const Rows b{{1, 0}, {1, 0}};
  const auto al = dtw(view(a), view(b));
  using P = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(al.path, (std::vector<P>{{0, 0}, {1, 0}, {2, 1}}));
}

TEST(Dtw, KnownSmallValue) {
  // a = (e1, e2), b = (e1): both a's map to b's single element, cost 0 + 1.
  const Rows a{{1, 0}, {0, 1}};
  const Rows b{{1, 0}};
  EXPECT_DOUBLE_EQ(dtw(view(a), view(b)).distance, 1.0);
  EXPECT_DOUBLE_EQ(dtw(view(a), view(b)).mean_similarity, 0.5);
}

TEST(Dtw, RejectsBadInput) {
  const Rows a{{1, 0}};
  const Rows z{{0, 0}};
  const Rows d3{{1, 0, 0}};
  EXPECT_THROW(dtw(view(a), {}), Error);
  EXPECT_THROW(dtw(view(a), view(z)), Error);
  EXPECT_THROW(dtw(view(a), view(d3)), Error);
}

TEST(Dtw, SequenceOfReportsUnknownIds) {
  auto c = testing::make_corpus({0, 0, 0}, 1, 3, 1);
  EXPECT_EQ(sequence_of(c, {"r002", "r000"}, "high").size(), 2u);
  try {
    sequence_of(c, {"r000", "ghost", "phantom"}, "high");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_EQ(e.detail().at("unknown_ids").size(), 2u);
  }
}

}  // namespace
}  // namespace narrative::evaluate
