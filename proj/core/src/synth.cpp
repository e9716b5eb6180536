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

#include "narrative/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "narrative/error.hpp"
#include "narrative/rng.hpp"

namespace narrative::synth {
namespace {

using nlohmann::json;

constexpr int kMaxCentroidAttempts = 100000;

std::string pad(std::size_t value, int width) {
  std::string digits = std::to_string(value);
  if (digits.size() < static_cast<std::size_t>(width)) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return digits;
}

void validate_config(const SynthConfig& c) {
  auto fail = [](const std::string& msg, const std::string& field) {
    throw Error(ErrorCode::kValidation, msg, {{"field", field}});
  };
  if (c.c < 2) fail("synth needs at least 2 clusters", "c");
  if (c.d < 2) fail("embedding dimension must be at least 2", "d");
  const auto stages = c.effective_stages();
  if (stages.empty()) fail("stages must not be empty", "stages");
  for (std::size_t s : stages) {
    if (s >= c.c) fail("stage refers to a cluster outside 0..c-1", "stages");
  }
  if (c.n < 2 * stages.size()) fail("corpus too small for the stage count", "n");
  if (!(c.label_fraction > 0.0 && c.label_fraction <= 1.0)) {
    fail("label_fraction must lie in (0, 1]", "label_fraction");
  }
  if (c.label_fraction * static_cast<double>(c.n) < static_cast<double>(stages.size())) {
    fail("label_fraction * n must allow one seed per stage", "label_fraction");
  }
  if (!(c.effective_noise() >= 0.0)) fail("noise_sigma must be non-negative", "noise_sigma");
  if (c.date_span_days < 1) fail("date_span_days must be positive", "date_span_days");
  if (!(c.location_fraction >= 0.0 && c.location_fraction <= 1.0)) {
    fail("location_fraction must lie in [0, 1]", "location_fraction");
  }
  for (std::size_t len : c.timeline_lengths) {
    if (len < stages.size() || len > c.n) {
      fail("timeline length must lie in [stage count, n]", "timeline_lengths");
    }
  }
}

std::vector<double> random_unit(std::size_t d, Rng& rng) {
  while (true) {
    std::vector<double> v(d);
    double norm = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (auto& x : v) x /= norm;
    return v;
  }
}

// Storyline clusters (in first-appearance order along the stages) form a walk
// on the sphere: each step turns by the minimum angle toward a direction
// orthogonal to all earlier storyline centroids. Remaining clusters are drawn
// by rejection against the minimum angle.
Matrix<double> draw_centroids(const SynthConfig& config, Rng& rng) {
  const double theta = config.min_angle_degrees * std::numbers::pi / 180.0;
  const double max_cos = std::cos(theta);
  std::vector<std::size_t> walk;
  for (std::size_t s : config.effective_stages()) {
    if (std::find(walk.begin(), walk.end(), s) == walk.end()) walk.push_back(s);
  }
  if (walk.size() > config.d) {
    throw Error(ErrorCode::kValidation,
                "cannot separate the centroids by the minimum angle",
                {{"c", config.c}, {"d", config.d},
                 {"min_angle_degrees", config.min_angle_degrees}});
  }
  Matrix<double> centroids(config.c, config.d);
  std::vector<std::vector<double>> basis;  // orthonormal directions used so far
  std::vector<double> current;
  for (std::size_t step = 0; step < walk.size(); ++step) {
    std::vector<double> dir;
    while (dir.empty()) {
      dir = random_unit(config.d, rng);
      for (const auto& b : basis) {
        double dot = 0.0;
        for (std::size_t i = 0; i < config.d; ++i) dot += dir[i] * b[i];
        for (std::size_t i = 0; i < config.d; ++i) dir[i] -= dot * b[i];
      }
      double norm = 0.0;
      for (double x : dir) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-6) {
        dir.clear();
        continue;
      }
      for (auto& x : dir) x /= norm;
    }
    basis.push_back(dir);
    if (step == 0) {
      current = dir;
    } else {
      for (std::size_t i = 0; i < config.d; ++i) {
        current[i] = std::cos(theta) * current[i] + std::sin(theta) * dir[i];
      }
    }
    for (std::size_t i = 0; i < config.d; ++i) centroids(walk[step], i) = current[i];
  }

  std::vector<std::size_t> placed_ids = walk;
  for (std::size_t k = 0; k < config.c; ++k) {
    if (std::find(walk.begin(), walk.end(), k) != walk.end()) continue;
    bool placed = false;
    for (int attempt = 0; attempt < kMaxCentroidAttempts && !placed; ++attempt) {
      const auto v = random_unit(config.d, rng);
      placed = true;
      for (std::size_t j : placed_ids) {
        double dot = 0.0;
        for (std::size_t i = 0; i < config.d; ++i) dot += v[i] * centroids(j, i);
        if (dot > max_cos + 1e-12) {
          placed = false;
          break;
        }
      }
      if (placed) {
        for (std::size_t i = 0; i < config.d; ++i) centroids(k, i) = v[i];
        placed_ids.push_back(k);
      }
    }
    if (!placed) {
      throw Error(ErrorCode::kValidation,
                  "cannot separate the centroids by the minimum angle",
                  {{"c", config.c}, {"d", config.d},
                   {"min_angle_degrees", config.min_angle_degrees}});
    }
  }
  return centroids;
}

}  // namespace

double separation_margin(std::size_t d, double min_angle_degrees) {
  const double half_angle = 0.5 * min_angle_degrees * std::numbers::pi / 180.0;
  return std::sin(half_angle) / std::sqrt(static_cast<double>(d));
}

std::vector<std::size_t> SynthConfig::effective_stages() const {
  if (!stages.empty()) return stages;
  std::vector<std::size_t> out(c);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

json config_to_json(const SynthConfig& c) {
  return {{"n", c.n},
          {"c", c.c},
          {"d", c.d},
          {"stages", c.effective_stages()},
          {"noise_sigma", c.effective_noise()},
          {"label_fraction", c.label_fraction},
          {"date_span_days", c.date_span_days},
          {"seed", c.seed},
          {"min_angle_degrees", c.min_angle_degrees},
          {"low_d", c.low_d},
          {"location_fraction", c.location_fraction},
          {"timeline_lengths", c.timeline_lengths}};
}

SynthConfig config_from_json(const json& doc) {
  SynthConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "n") {
        c.n = value.get<std::size_t>();
      } else if (key == "c") {
        c.c = value.get<std::size_t>();
      } else if (key == "d") {
        c.d = value.get<std::size_t>();
      } else if (key == "stages") {
        c.stages = value.get<std::vector<std::size_t>>();
      } else if (key == "noise_sigma") {
        if (!value.is_null()) c.noise_sigma = value.get<double>();
      } else if (key == "label_fraction") {
        c.label_fraction = value.get<double>();
      } else if (key == "date_span_days") {
        c.date_span_days = value.get<int>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "min_angle_degrees") {
        c.min_angle_degrees = value.get<double>();
      } else if (key == "low_d") {
        c.low_d = value.get<std::size_t>();
      } else if (key == "location_fraction") {
        c.location_fraction = value.get<double>();
      } else if (key == "timeline_lengths") {
        c.timeline_lengths = value.get<std::vector<std::size_t>>();
      } else {
        throw Error(ErrorCode::kValidation, "unknown synth field '" + key + "'",
                    {{"field", key}});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed synth config: ") + e.what());
  }
  return c;
}

std::vector<std::size_t> planted_timeline(const std::vector<std::size_t>& stage_of_record,
                                          std::size_t length) {
  const std::size_t n = stage_of_record.size();
  std::vector<std::size_t> seg_start;
  std::vector<std::size_t> seg_size;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || stage_of_record[i] != stage_of_record[i - 1]) {
      seg_start.push_back(i);
      seg_size.push_back(0);
    }
    ++seg_size.back();
  }
  const std::size_t segments = seg_start.size();
  if (length < segments || length > n) {
    throw Error(ErrorCode::kValidation, "timeline length must lie in [stage count, n]",
                {{"length", length}, {"stages", segments}, {"n", n}});
  }
  // One pick per segment, the rest shared by largest remainder.
  std::vector<std::size_t> quota(segments, 1);
  const std::size_t extra = length - segments;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < segments; ++s) {
    const double share = static_cast<double>(extra) * static_cast<double>(seg_size[s] - 1) /
                         static_cast<double>(n - segments);
    std::size_t whole = static_cast<std::size_t>(std::floor(share));
    whole = std::min(whole, seg_size[s] - 1);
    quota[s] += whole;
    assigned += whole;
    remainders.emplace_back(share - static_cast<double>(whole), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < extra; r = (r + 1) % segments) {
    const std::size_t s = remainders[r].second;
    if (quota[s] < seg_size[s]) {
      ++quota[s];
      ++assigned;
    }
  }
  std::vector<std::size_t> picks;
  for (std::size_t s = 0; s < segments; ++s) {
    for (std::size_t j = 0; j < quota[s]; ++j) {
      picks.push_back(seg_start[s] + j * seg_size[s] / quota[s]);
    }
  }
  picks.back() = n - 1;
  return picks;
}

SynthCorpus generate(const SynthConfig& config) {
  validate_config(config);
  const auto stages = config.effective_stages();
  const std::size_t n = config.n;
  const std::size_t S = stages.size();
  const double sigma = config.effective_noise();
  Rng rng(config.seed);

  SynthCorpus out;
  out.centroids = draw_centroids(config, rng);
  for (std::size_t k = 0; k < config.c; ++k) {
    out.corpus.categories.push_back("cluster_" + pad(k, 2));
  }
  for (std::size_t s = 0; s < S; ++s) out.corpus.locations.push_back("site_" + pad(s, 2));

  out.stage_of_record.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.stage_of_record[i] = i * S / n;

  // High-dimensional embeddings.
  Matrix<float> high(n, config.d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cluster = stages[out.stage_of_record[i]];
    std::vector<double> v(config.d);
    double norm = 0.0;
    for (std::size_t j = 0; j < config.d; ++j) {
      v[j] = out.centroids(cluster, j) + sigma * rng.normal();
      norm += v[j] * v[j];
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < config.d; ++j) high(i, j) = static_cast<float>(v[j] / norm);
  }
  out.corpus.embeddings[std::string(corpus::kHighSpace)] = {
      std::string(corpus::kHighSpace), high, true};
  out.corpus.embedding_files[std::string(corpus::kHighSpace)] = "high.nfem";

  // Low-dimensional space: fixed Gaussian projection of the high rows.
  if (config.low_d > 0) {
    Matrix<double> proj(config.d, config.low_d);
    for (std::size_t j = 0; j < config.d; ++j) {
      for (std::size_t k = 0; k < config.low_d; ++k) proj(j, k) = rng.normal();
    }
    Matrix<float> low(n, config.low_d);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(config.low_d, 0.0);
      for (std::size_t j = 0; j < config.d; ++j) {
        for (std::size_t k = 0; k < config.low_d; ++k) v[k] += high(i, j) * proj(j, k);
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        v[0] = 1.0;
        norm = 1.0;
      }
      for (std::size_t k = 0; k < config.low_d; ++k) low(i, k) = static_cast<float>(v[k] / norm);
    }
    out.corpus.embeddings[std::string(corpus::kLowSpace)] = {
        std::string(corpus::kLowSpace), low, true};
    out.corpus.embedding_files[std::string(corpus::kLowSpace)] = "low.nfem";
  }

  // Monotone dates with jitter: record i falls in day floor((i + u) * span / n).
  const corpus::Date start = corpus::parse_iso_date("2000-01-01");
  std::vector<corpus::Date> dates(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (static_cast<double>(i) + rng.uniform()) *
                       static_cast<double>(config.date_span_days) / static_cast<double>(n);
    dates[i] = start + std::chrono::days(static_cast<int>(std::floor(pos)));
  }

  // Expert labels: the first and last records (timeline anchors), one seed
  // per stage, then uniform fill.
  const std::size_t labeled_count = std::max<std::size_t>(
      S, static_cast<std::size_t>(std::llround(config.label_fraction * static_cast<double>(n))));
  std::vector<char> labeled(n, 0);
  labeled[0] = 1;
  labeled[n - 1] = 1;
  std::size_t seeded = 2;
  std::vector<std::size_t> seg_first(S, n), seg_count(S, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = out.stage_of_record[i];
    seg_first[s] = std::min(seg_first[s], i);
    ++seg_count[s];
  }
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t pick = seg_first[s] + rng.below(seg_count[s]);
    if (!labeled[pick]) ++seeded;
    labeled[pick] = 1;
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!labeled[i]) rest.push_back(i);
  }
  rng.shuffle(rest);
  for (std::size_t r = 0; seeded < labeled_count && r < rest.size(); ++r, ++seeded) {
    labeled[rest[r]] = 1;
  }

  const int width = n > 1 ? static_cast<int>(std::to_string(n - 1).size()) : 1;
  for (std::size_t i = 0; i < n; ++i) {
    corpus::ImageRecord rec;
    rec.id = "img_" + pad(i, std::max(width, 4));
    if (config.location_fraction > 0.0 && rng.uniform() < config.location_fraction) {
      rec.location_tag = out.corpus.locations[out.stage_of_record[i]];
    }
    if (labeled[i]) {
      rec.expert_category = out.corpus.categories[stages[out.stage_of_record[i]]];
      rec.expert_date = dates[i];
    }
    out.corpus.records.push_back(std::move(rec));
  }
  out.corpus.reindex();
  corpus::validate(out.corpus);

  for (std::size_t length : config.timeline_lengths) {
    evaluate::Timeline t;
    for (std::size_t i : planted_timeline(out.stage_of_record, length)) {
      t.ids.push_back(out.corpus.records[i].id);
    }
    out.ground_truth.push_back(std::move(t));
  }
  return out;
}

}  // namespace narrative::synth
