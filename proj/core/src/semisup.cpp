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

#include "narrative/semisup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "narrative/error.hpp"

namespace narrative::semisup {
namespace {

using corpus::Corpus;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kValidation, "alpha must lie in (0, 1)",
                {{"field", "alpha"}, {"value", alpha}});
  }
}

const corpus::EmbeddingMatrix& normalized_space(const Corpus& c,
                                                const std::string& space) {
  const auto& emb = c.embedding(space);
  if (!emb.normalized) {
    throw Error(ErrorCode::kValidation,
                "embedding space '" + space + "' is not unit-normalized",
                {{"space", space}, {"reason", "not_normalized"}});
  }
  return emb;
}

AffinityGraph affinity_for(const Corpus& c, const SpreadParams& params) {
  const auto features = build_augmented_features(
      c, normalized_space(c, params.space), params.location_weight);
  if (features.rows() < 2) {
    AffinityGraph g;
    g.n = features.rows();
    g.adjacency.resize(g.n);
    return g;
  }
  // Small corpora cannot supply the default neighborhood size.
  const std::size_t k = std::min(params.knn_k, features.rows() - 1);
  return build_affinity(features, k, params.sigma);
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(
      std::distance(row.begin(), std::max_element(row.begin(), row.end())));
}

}  // namespace

double AffinityGraph::weight(std::size_t i, std::size_t j) const {
  const auto& row = adjacency.at(i);
  auto it = std::lower_bound(
      row.begin(), row.end(), j,
      [](const auto& entry, std::size_t key) { return entry.first < key; });
  return it != row.end() && it->first == j ? it->second : 0.0;
}

Matrix<double> build_augmented_features(const Corpus& corpus,
                                        const corpus::EmbeddingMatrix& emb,
                                        double location_weight) {
  if (location_weight < 0.0) {
    throw Error(ErrorCode::kValidation, "location_weight must be >= 0",
                {{"field", "location_weight"}, {"value", location_weight}});
  }
  const std::size_t d = emb.d();
  const std::size_t width = d + corpus.locations.size();
  Matrix<double> out(emb.n(), width, 0.0);
  for (std::size_t i = 0; i < emb.n(); ++i) {
    auto dst = out.row(i);
    auto src = emb.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    const auto& tag = corpus.records[i].location_tag;
    if (tag) {
      if (auto loc = corpus.location_index(*tag)) {
        dst[d + *loc] = location_weight;
      }
    }
  }
  return out;
}

AffinityGraph build_affinity(const Matrix<double>& features, std::size_t knn_k,
                             std::optional<double> sigma) {
  const std::size_t n = features.rows();
  if (n < 2) {
    throw Error(ErrorCode::kValidation, "affinity graph needs at least 2 nodes",
                {{"n", n}});
  }
  if (knn_k < 1 || knn_k >= n) {
    throw Error(ErrorCode::kValidation, "knn_k must lie in [1, n)",
                {{"field", "knn_k"}, {"value", knn_k}, {"n", n}});
  }
  if (sigma && !(*sigma > 0.0)) {
    throw Error(ErrorCode::kValidation, "sigma must be positive",
                {{"field", "sigma"}, {"value", *sigma}});
  }

  Matrix<double> sq(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = features.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = features.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        s += diff * diff;
      }
      sq(i, j) = s;
      sq(j, i) = s;
    }
  }

  // Directed k-NN lists, ties broken by index.
  std::vector<std::vector<std::size_t>> knn(n);
  std::vector<double> knn_dist;
  knn_dist.reserve(n * knn_k);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(i));
    std::partial_sort(order.begin(),
                      order.begin() + static_cast<std::ptrdiff_t>(knn_k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return sq(i, a) != sq(i, b) ? sq(i, a) < sq(i, b)
                                                    : a < b;
                      });
    knn[i].assign(order.begin(),
                  order.begin() + static_cast<std::ptrdiff_t>(knn_k));
    for (std::size_t j : knn[i]) knn_dist.push_back(std::sqrt(sq(i, j)));
  }

  double bandwidth = 1.0;
  if (sigma) {
    bandwidth = *sigma;
  } else {
    std::vector<double> sorted = knn_dist;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double median =
        m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    if (median > 0.0) {
      bandwidth = median;
    } else {
      // Heavily duplicated data: fall back to the smallest positive distance.
      auto pos = std::upper_bound(sorted.begin(), sorted.end(), 0.0);
      if (pos != sorted.end()) bandwidth = *pos;
    }
  }

  AffinityGraph g;
  g.n = n;
  g.kernel_bandwidth = bandwidth;
  g.knn_k = knn_k;
  g.adjacency.resize(n);
  std::vector<std::set<std::size_t>> linked(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : knn[i]) {
      linked[i].insert(j);
      linked[j].insert(i);
    }
  }
  const double denom = 2.0 * bandwidth * bandwidth;
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j : linked[i]) {
      const double w = std::exp(-sq(i, j) / denom);
      g.adjacency[i].emplace_back(j, w);
      total += w;
    }
    if (g.adjacency[i].empty() || total == 0.0) {
      throw Error(ErrorCode::kValidation,
                  "node " + std::to_string(i) + " has no positive affinity",
                  {{"row", i}, {"reason", "isolated_node"}});
    }
  }
  return g;
}

ClusterDistribution spread_labels(const AffinityGraph& graph,
                                  const LabelSeed& seeds, double alpha,
                                  double tol, std::size_t max_iter) {
  check_alpha(alpha);
  const std::size_t n = graph.n;
  const std::size_t c = seeds.class_names.size();
  if (seeds.seed_rows.empty()) {
    throw Error(ErrorCode::kValidation, "label spreading needs at least one seed",
                {{"reason", "no_seeds"}});
  }
  for (const auto& [row, cls] : seeds.seed_rows) {
    if (row >= n || cls >= c) {
      throw Error(ErrorCode::kValidation, "seed out of range",
                  {{"row", row}, {"class", cls}});
    }
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kValidation, "tol must be positive",
                {{"field", "tol"}, {"value", tol}});
  }

  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (const auto& [_, w] : graph.adjacency[i]) deg += w;
    if (deg > 0.0) inv_sqrt_degree[i] = 1.0 / std::sqrt(deg);
  }

  Matrix<double> prior(n, c, 0.0);
  for (const auto& [row, cls] : seeds.seed_rows) prior(row, cls) = 1.0 - alpha;

  Matrix<double> f = prior;
  Matrix<double> next(n, c, 0.0);
  ClusterDistribution out;
  out.class_names = seeds.class_names;
  out.alpha = alpha;
  while (out.iterations < max_iter) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = next.row(i);
      const auto base = prior.row(i);
      std::copy(base.begin(), base.end(), dst.begin());
      for (const auto& [j, w] : graph.adjacency[i]) {
        const double s = alpha * w * inv_sqrt_degree[i] * inv_sqrt_degree[j];
        const auto src = f.row(j);
        for (std::size_t k = 0; k < c; ++k) dst[k] += s * src[k];
      }
      const auto old = f.row(i);
      for (std::size_t k = 0; k < c; ++k) {
        change = std::max(change, std::abs(dst[k] - old[k]));
      }
    }
    std::swap(f, next);
    ++out.iterations;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto row = f.row(i);
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    if (!(total > 0.0)) {
      throw Error(ErrorCode::kValidation,
                  "row " + std::to_string(i) + " is unreachable from every seed",
                  {{"row", i}, {"reason", "unreachable_node"}});
    }
    for (double& v : row) v /= total;
  }
  for (const auto& [row, cls] : seeds.seed_rows) {
    if (argmax(f.row(row)) != cls) out.seed_flips.push_back(row);
  }
  out.probs = std::move(f);
  return out;
}

CategoryPropagation propagate_categories(Corpus corpus,
                                         const SpreadParams& params) {
  LabelSeed seeds;
  seeds.class_names = corpus.categories;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus.records[i];
    if (!r.expert_category) continue;
    const auto cls = corpus.category_index(*r.expert_category);
    if (!cls) {
      throw Error(ErrorCode::kValidation,
                  "record '" + r.id + "' has unknown category",
                  {{"id", r.id}, {"reason", "unknown_category"}});
    }
    seeds.seed_rows.emplace(i, *cls);
  }
  if (seeds.seed_rows.empty()) {
    throw Error(ErrorCode::kValidation,
                "category propagation needs at least one expert category",
                {{"reason", "no_category_seeds"}});
  }

  const AffinityGraph graph = affinity_for(corpus, params);
  ClusterDistribution dist =
      spread_labels(graph, seeds, params.alpha, params.tol, params.max_iter);

  Matrix<float> stored(dist.probs.rows(), dist.probs.cols());
  for (std::size_t k = 0; k < stored.data().size(); ++k) {
    stored.data()[k] = static_cast<float>(dist.probs.data()[k]);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& r = corpus.records[i];
    r.propagated_category = r.expert_category
                                ? *r.expert_category
                                : corpus.categories[argmax(dist.probs.row(i))];
    r.cluster_probs_row_index = i;
  }
  corpus.cluster_probs = std::move(stored);
  return {std::move(dist), std::move(corpus)};
}

DatePropagation propagate_dates(Corpus corpus, const SpreadParams& params) {
  std::set<corpus::Date> distinct;
  for (const auto& r : corpus.records) {
    if (r.expert_date) distinct.insert(*r.expert_date);
  }
  if (distinct.size() < 2) {
    throw Error(ErrorCode::kValidation,
                "date propagation needs at least two distinct expert dates",
                {{"reason", "too_few_date_seeds"}, {"distinct", distinct.size()}});
  }
  const std::vector<corpus::Date> bins(distinct.begin(), distinct.end());
  const corpus::Date origin = bins.front();

  LabelSeed seeds;
  for (const auto& b : bins) seeds.class_names.push_back(corpus::format_iso_date(b));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& d = corpus.records[i].expert_date;
    if (!d) continue;
    const auto pos = std::lower_bound(bins.begin(), bins.end(), *d) - bins.begin();
    seeds.seed_rows.emplace(i, static_cast<std::size_t>(pos));
  }

  const AffinityGraph graph = affinity_for(corpus, params);
  ClusterDistribution dist =
      spread_labels(graph, seeds, params.alpha, params.tol, params.max_iter);

  DatePropagation out;
  for (const auto& b : bins) out.bin_offsets.push_back((b - origin).count());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& r = corpus.records[i];
    if (r.expert_date) {
      r.propagated_date = r.expert_date;
      continue;
    }
    const auto row = dist.probs.row(i);
    double mean = 0.0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      mean += row[b] * static_cast<double>(out.bin_offsets[b]);
    }
    r.propagated_date = origin + std::chrono::days{std::llround(mean)};
  }
  out.distribution = std::move(dist);
  out.corpus = std::move(corpus);
  return out;
}

Propagation propagate(Corpus corpus, const SpreadParams& params) {
  auto cats = propagate_categories(std::move(corpus), params);
  auto dates = propagate_dates(std::move(cats.corpus), params);
  return {std::move(dates.corpus), std::move(cats.distribution),
          std::move(dates.distribution)};
}

}  // namespace narrative::semisup
