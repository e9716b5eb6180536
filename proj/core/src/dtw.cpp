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

#include "narrative/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "narrative/error.hpp"

namespace narrative::evaluate {

double cosine(std::span<const float> a, std::span<const float> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::kValidation, "cosine of a zero vector is undefined");
  }
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

DtwAlignment dtw(const EmbeddingSequence& a, const EmbeddingSequence& b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kValidation, "DTW needs two non-empty sequences",
                {{"len_a", a.size()}, {"len_b", b.size()}});
  }
  const std::size_t d = a.front().size();
  for (const auto* seq : {&a, &b}) {
    for (const auto& row : *seq) {
      if (row.size() != d) {
        throw Error(ErrorCode::kValidation, "DTW sequences differ in dimension",
                    {{"expected", d}, {"actual", row.size()}});
      }
    }
  }
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> sim(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) sim[i * m + j] = cosine(a[i], b[j]);
  }
  // acc has a sentinel row and column of +inf.
  std::vector<double> acc((n + 1) * (m + 1), inf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return acc[i * (m + 1) + j]; };
  at(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const double best = std::min({at(i - 1, j - 1), at(i - 1, j), at(i, j - 1)});
      at(i, j) = (1.0 - sim[(i - 1) * m + (j - 1)]) + best;
    }
  }

  DtwAlignment out;
  out.distance = at(n, m);
  std::size_t i = n;
  std::size_t j = m;
  while (true) {
    out.path.emplace_back(i - 1, j - 1);
    if (i == 1 && j == 1) break;
    const double diag = at(i - 1, j - 1);
    const double up = at(i - 1, j);
    const double left = at(i, j - 1);
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(out.path.begin(), out.path.end());
  double total = 0.0;
  for (const auto& [pi, pj] : out.path) total += sim[pi * m + pj];
  out.mean_similarity = total / static_cast<double>(out.path.size());
  return out;
}

double mean_path_similarity(const DtwAlignment& alignment,
                            const EmbeddingSequence& a,
                            const EmbeddingSequence& b) {
  if (alignment.path.empty()) {
    throw Error(ErrorCode::kValidation, "alignment path is empty");
  }
  double total = 0.0;
  for (const auto& [i, j] : alignment.path) {
    if (i >= a.size() || j >= b.size()) {
      throw Error(ErrorCode::kValidation, "alignment index out of range");
    }
    total += cosine(a[i], b[j]);
  }
  return total / static_cast<double>(alignment.path.size());
}

EmbeddingSequence sequence_of(const corpus::Corpus& corpus,
                              const std::vector<std::string>& ids,
                              const std::string& space) {
  const auto& emb = corpus.embedding(space);
  EmbeddingSequence seq;
  seq.reserve(ids.size());
  std::vector<std::string> unknown;
  for (const auto& id : ids) {
    const auto idx = corpus.find(id);
    if (!idx) {
      unknown.push_back(id);
      continue;
    }
    seq.push_back(emb.values.row(*idx));
  }
  if (!unknown.empty()) {
    throw Error(ErrorCode::kValidation, "timeline references unknown ids",
                {{"unknown_ids", unknown}});
  }
  return seq;
}

nlohmann::json alignment_to_json(const DtwAlignment& alignment) {
  nlohmann::json path = nlohmann::json::array();
  for (const auto& [i, j] : alignment.path) path.push_back({i, j});
  return {{"path", path},
          {"distance", alignment.distance},
          {"mean_similarity", alignment.mean_similarity}};
}

}  // namespace narrative::evaluate
