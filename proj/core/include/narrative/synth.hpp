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

#ifndef NARRATIVE_SYNTH_HPP_
#define NARRATIVE_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/corpus.hpp"
#include "narrative/experiment.hpp"
#include "narrative/matrix.hpp"

namespace narrative::synth {

// Per-coordinate noise whose expected norm is half the distance between two
// unit centroids at the given angle (the nearest-centroid margin).
double separation_margin(std::size_t d, double min_angle_degrees);

struct SynthConfig {
  std::size_t n = 200;
  std::size_t c = 5;
  std::size_t d = 32;
  std::vector<std::size_t> stages;  // cluster per stage; empty means 0..c-1
  std::optional<double> noise_sigma;  // unset: separation_margin(d, min angle)
  double label_fraction = 0.3;
  int date_span_days = 150;
  std::uint64_t seed = 0;
  double min_angle_degrees = 60.0;
  std::size_t low_d = 4;  // 0 disables the low-dimensional space
  double location_fraction = 0.0;  // records tagged with their stage's site
  std::vector<std::size_t> timeline_lengths = {5, 10, 15, 20, 25, 30};

  double effective_noise() const {
    return noise_sigma.value_or(separation_margin(d, min_angle_degrees));
  }
  std::vector<std::size_t> effective_stages() const;
};

nlohmann::json config_to_json(const SynthConfig& config);
SynthConfig config_from_json(const nlohmann::json& doc);

struct SynthCorpus {
  corpus::Corpus corpus;
  std::vector<evaluate::Timeline> ground_truth;  // one per timeline length
  std::vector<std::size_t> stage_of_record;      // stage position, not cluster
  Matrix<double> centroids;                      // c x d, unit rows
};

// Records are generated in temporal order: record i sits in stage
// floor(i * S / n) and ids sort in generation order.
SynthCorpus generate(const SynthConfig& config);

// Evenly spaced planted-storyline picks: positions are shared among stage
// segments in proportion to their size, each segment contributes from its
// first record, and the last pick is the final record.
std::vector<std::size_t> planted_timeline(const std::vector<std::size_t>& stage_of_record,
                                          std::size_t length);

}  // namespace narrative::synth

#endif  // NARRATIVE_SYNTH_HPP_
