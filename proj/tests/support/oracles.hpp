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

#ifndef NARRATIVE_TESTS_ORACLES_HPP_
#define NARRATIVE_TESTS_ORACLES_HPP_

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "narrative/rng.hpp"
#include "narrative/semisup.hpp"

namespace narrative::testing {

// Random connected weighted graph; adjacency rows sorted by neighbor.
inline semisup::AffinityGraph random_affinity(std::size_t n, Rng& rng) {
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t a = order[i], b = order[rng.below(i)];
    w[a][b] = w[b][a] = 0.05 + rng.uniform();
  }
  const double density = 0.1 + 0.5 * rng.uniform();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (w[i][j] == 0.0 && rng.uniform() < density) w[i][j] = w[j][i] = 0.05 + rng.uniform();
  semisup::AffinityGraph g;
  g.n = n;
  g.adjacency.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (w[i][j] > 0.0) g.adjacency[i].emplace_back(j, w[i][j]);
  return g;
}

// (1-a)(I - aS)^-1 Y with S = D^-1/2 W D^-1/2, rows normalized.
inline Eigen::MatrixXd closed_form_spread(const semisup::AffinityGraph& g,
                                          const semisup::LabelSeed& seeds, double alpha) {
  const auto n = static_cast<Eigen::Index>(g.n);
  const auto c = static_cast<Eigen::Index>(seeds.class_names.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < g.n; ++i)
    for (const auto& [j, v] : g.adjacency[i]) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
  const Eigen::VectorXd deg = w.rowwise().sum();
  Eigen::VectorXd inv = deg.array().rsqrt();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(deg(i) > 0.0)) inv(i) = 0.0;
  const Eigen::MatrixXd s = inv.asDiagonal() * w * inv.asDiagonal();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, c);
  for (const auto& [row, cls] : seeds.seed_rows)
    y(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(cls)) = 1.0;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - alpha * s;
  Eigen::MatrixXd f = (1.0 - alpha) * a.fullPivLu().solve(y);
  for (Eigen::Index i = 0; i < n; ++i) f.row(i) /= f.row(i).sum();
  return f;
}

inline double oracle_cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  return dot / std::sqrt(na * nb);
}

// Minimum over every monotone warping path, cost 1 - cos.
inline double brute_force_dtw(const std::vector<std::span<const float>>& a,
                              const std::vector<std::span<const float>>& b,
                              std::size_t* path_count = nullptr) {
  const std::size_t n = a.size(), m = b.size();
  double best = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j,
                                                                   double acc) {
    acc += 1.0 - oracle_cosine(a[i], b[j]);
    if (i + 1 == n && j + 1 == m) {
      ++count;
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, acc);
    if (i + 1 < n) walk(i + 1, j, acc);
    if (j + 1 < m) walk(i, j + 1, acc);
  };
  walk(0, 0, 0.0);
  if (path_count) *path_count = count;
  return best;
}

}  // namespace narrative::testing

#endif  // NARRATIVE_TESTS_ORACLES_HPP_
