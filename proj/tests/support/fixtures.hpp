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

#ifndef NARRATIVE_TESTS_FIXTURES_HPP_
#define NARRATIVE_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "narrative/coherence.hpp"
#include "narrative/corpus.hpp"
#include "narrative/rng.hpp"

namespace narrative::testing {

inline std::string record_id(std::size_t i) {
  std::string s = std::to_string(i);
  return "r" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

inline std::vector<float> random_unit(Rng& rng, std::size_t d) {
  std::vector<float> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = static_cast<float>(rng.normal());
      norm += static_cast<double>(x) * x;
    }
  } while (norm < 1e-6);
  const double inv = 1.0 / std::sqrt(norm);
  for (auto& x : v) x = static_cast<float>(x * inv);
  return v;
}

// Records r000.. dated one day apart, labeled with the given categories.
inline corpus::Corpus make_corpus(const std::vector<std::size_t>& category_of,
                                  std::size_t num_categories, std::size_t d,
                                  std::uint64_t seed) {
  Rng rng(seed);
  corpus::Corpus c;
  for (std::size_t k = 0; k < num_categories; ++k) c.categories.push_back("cat" + std::to_string(k));
  const auto start = corpus::parse_iso_date("2020-01-01");
  const std::size_t n = category_of.size();
  Matrix<float> high(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    corpus::ImageRecord r;
    r.id = record_id(i);
    r.expert_category = c.categories[category_of[i]];
    r.expert_date = start + std::chrono::days(static_cast<int>(i));
    c.records.push_back(r);
    const auto v = random_unit(rng, d);
    std::copy(v.begin(), v.end(), high.row(i).begin());
  }
  c.embedding_files["high"] = "high.nfem";
  c.embeddings["high"] = corpus::EmbeddingMatrix{"high", std::move(high), true};
  c.reindex();
  return c;
}

// Random DAG over the corpus in index order; edges u<v with random coherence.
inline coherence::CoherenceGraph random_dag(std::size_t n, std::size_t max_edges, Rng& rng,
                                            bool quantized) {
  coherence::CoherenceGraph g;
  g.space_name = "high";
  for (std::size_t i = 0; i < n; ++i) {
    g.node_order.push_back(i);
    g.rank.push_back(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  rng.shuffle(pairs);
  const std::size_t m = std::min(pairs.size(), max_edges);
  pairs.resize(m);
  std::sort(pairs.begin(), pairs.end());
  for (const auto& [u, v] : pairs) {
    double w = rng.uniform();
    if (quantized) w = static_cast<double>(1 + rng.below(4)) / 4.0;
    g.edges.push_back({u, v, w, w, 1.0});
  }
  return g;
}

// Visits every s->t path with exactly k nodes, in the interval between s and t.
inline void for_each_path(const coherence::CoherenceGraph& g, std::size_t n, std::size_t s,
                          std::size_t t, std::size_t k,
                          const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& e : g.edges) out[e.source].push_back(e.target);
  std::vector<std::size_t> path{s};
  std::function<void(std::size_t)> walk = [&](std::size_t u) {
    if (path.size() == k) {
      if (u == t) visit(path);
      return;
    }
    for (std::size_t v : out[u]) {
      if (g.rank[v] > g.rank[t]) continue;
      path.push_back(v);
      walk(v);
      path.pop_back();
    }
  };
  walk(s);
}

struct BruteForceResult {
  std::optional<double> mu;     // unset when no admissible path exists
  double best_sum = 0.0;        // max total coherence among paths attaining mu
  std::size_t admissible = 0;
};

// Exhaustive max-min over paths with exactly k nodes covering `required` categories.
inline BruteForceResult brute_force_maxmin(const coherence::CoherenceGraph& g,
                                           const corpus::Corpus& c, std::size_t s,
                                           std::size_t t, std::size_t k,
                                           std::size_t required) {
  std::map<std::pair<std::size_t, std::size_t>, double> weight;
  for (const auto& e : g.edges) weight[{e.source, e.target}] = e.coherence;
  BruteForceResult result;
  for_each_path(g, c.size(), s, t, k, [&](const std::vector<std::size_t>& path) {
    std::set<std::string> cats;
    for (std::size_t p : path) cats.insert(*c.records[p].effective_category());
    if (cats.size() < required) return;
    ++result.admissible;
    double mn = std::numeric_limits<double>::infinity(), sum = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const double w = weight.at({path[i], path[i + 1]});
      mn = std::min(mn, w);
      sum += w;
    }
    if (!result.mu || mn > *result.mu) {
      result.mu = mn;
      result.best_sum = sum;
    } else if (mn == *result.mu) {
      result.best_sum = std::max(result.best_sum, sum);
    }
  });
  return result;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("narrative_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace narrative::testing

#endif  // NARRATIVE_TESTS_FIXTURES_HPP_
