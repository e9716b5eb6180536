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

#ifndef NARRATIVE_SEMISUP_HPP_
#define NARRATIVE_SEMISUP_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "narrative/corpus.hpp"
#include "narrative/matrix.hpp"

namespace narrative::semisup {

// Symmetric k-NN affinity graph with RBF weights and zero diagonal.
struct AffinityGraph {
  std::size_t n = 0;
  // adjacency[i] sorted by neighbor index; weights mirror across (i, j).
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;
  double kernel_bandwidth = 1.0;
  std::size_t knn_k = 0;

  double weight(std::size_t i, std::size_t j) const;
};

struct LabelSeed {
  std::vector<std::string> class_names;
  std::map<std::size_t, std::size_t> seed_rows;  // row -> class index
};

struct ClusterDistribution {
  std::vector<std::string> class_names;
  Matrix<double> probs;  // n x c, rows sum to one
  double alpha = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  // Seeded rows whose argmax moved away from the seed under soft clamping.
  std::vector<std::size_t> seed_flips;
};

struct SpreadParams {
  double alpha = 0.9;
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  std::size_t knn_k = 10;
  std::optional<double> sigma;  // unset: median k-NN distance
  double location_weight = 1.0;
  std::string space = std::string(corpus::kHighSpace);
};

// Rows are [unit embedding | location_weight * one-hot(location)].
Matrix<double> build_augmented_features(const corpus::Corpus& corpus,
                                        const corpus::EmbeddingMatrix& emb,
                                        double location_weight);

// w(i,j) = exp(-|xi - xj|^2 / (2 sigma^2)) when j is among the knn_k nearest
// neighbors of i or vice versa. Requires n >= 2 and knn_k < n.
AffinityGraph build_affinity(const Matrix<double>& features, std::size_t knn_k,
                             std::optional<double> sigma = std::nullopt);

// Iterates F <- alpha S F + (1 - alpha) Y from F = (1 - alpha) Y with
// S = D^-1/2 W D^-1/2 until the largest entry change drops below tol, then
// normalizes rows. Non-convergence is reported through `converged`.
ClusterDistribution spread_labels(const AffinityGraph& graph,
                                  const LabelSeed& seeds, double alpha,
                                  double tol, std::size_t max_iter);

struct CategoryPropagation {
  ClusterDistribution distribution;
  corpus::Corpus corpus;
};

// Fills propagated_category (argmax; expert rows keep their label),
// cluster_probs and cluster_probs_row_index.
CategoryPropagation propagate_categories(corpus::Corpus corpus,
                                         const SpreadParams& params = {});

struct DatePropagation {
  ClusterDistribution distribution;
  std::vector<std::int64_t> bin_offsets;  // day offset of each date class
  corpus::Corpus corpus;
};

// Date classes are the distinct expert dates; the propagated date is the
// probability-weighted mean day offset, rounded to the nearest day.
DatePropagation propagate_dates(corpus::Corpus corpus,
                                const SpreadParams& params = {});

struct Propagation {
  corpus::Corpus corpus;
  ClusterDistribution categories;
  ClusterDistribution dates;
};

// Categories, then dates, over the same affinity substrate.
Propagation propagate(corpus::Corpus corpus, const SpreadParams& params = {});

}  // namespace narrative::semisup

#endif  // NARRATIVE_SEMISUP_HPP_
