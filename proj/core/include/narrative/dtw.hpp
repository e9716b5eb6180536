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

#ifndef NARRATIVE_DTW_HPP_
#define NARRATIVE_DTW_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/corpus.hpp"

namespace narrative::evaluate {

using EmbeddingSequence = std::vector<std::span<const float>>;

struct DtwAlignment {
  std::vector<std::pair<std::size_t, std::size_t>> path;
  double distance = 0.0;
  double mean_similarity = 0.0;
};

// Cosine of the angle between a and b (not assumed unit length), in [-1, 1].
double cosine(std::span<const float> a, std::span<const float> b);

// Local cost 1 - cosine, unnormalized path sum. Backtracking prefers the
// diagonal step, then (1,0), then (0,1).
DtwAlignment dtw(const EmbeddingSequence& a, const EmbeddingSequence& b);

double mean_path_similarity(const DtwAlignment& alignment,
                            const EmbeddingSequence& a,
                            const EmbeddingSequence& b);

// Rows of the given space for the listed ids, in order.
EmbeddingSequence sequence_of(const corpus::Corpus& corpus,
                              const std::vector<std::string>& ids,
                              const std::string& space);

nlohmann::json alignment_to_json(const DtwAlignment& alignment);

}  // namespace narrative::evaluate

#endif  // NARRATIVE_DTW_HPP_
