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

#ifndef NARRATIVE_CORPUS_HPP_
#define NARRATIVE_CORPUS_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "narrative/matrix.hpp"

namespace narrative::corpus {

using Date = std::chrono::sys_days;

// Parses "YYYY-MM-DD". Throws Error(kValidation) on malformed input.
Date parse_iso_date(std::string_view text);
std::string format_iso_date(Date date);

struct ImageRecord {
  std::string id;
  std::optional<std::string> file_ref;
  std::optional<std::string> location_tag;
  std::optional<std::string> expert_category;
  std::optional<Date> expert_date;
  std::optional<std::string> propagated_category;
  std::optional<Date> propagated_date;
  std::optional<std::size_t> cluster_probs_row_index;

  // Expert labels always win over propagated ones.
  const std::optional<std::string>& effective_category() const {
    return expert_category ? expert_category : propagated_category;
  }
  std::optional<Date> effective_date() const {
    return expert_date ? expert_date : propagated_date;
  }

  bool operator==(const ImageRecord&) const = default;
};

// n x d float32 matrix of visual features, row i <-> record i.
struct EmbeddingMatrix {
  std::string space_name;
  Matrix<float> values;
  bool normalized = false;

  std::size_t n() const { return values.rows(); }
  std::size_t d() const { return values.cols(); }
  std::span<const float> row(std::size_t i) const { return values.row(i); }

  bool operator==(const EmbeddingMatrix&) const = default;
};

// Embedding-file space names. "clusters" holds the label-spreading
// distribution rather than visual features.
inline constexpr std::string_view kHighSpace = "high";
inline constexpr std::string_view kLowSpace = "low";
inline constexpr std::string_view kClusterSpace = "clusters";

// Manifest plus the matrices it references. Immutable after load; every
// downstream module indexes rows by position in `records`.
struct Corpus {
  std::vector<std::string> categories;
  std::vector<std::string> locations;
  std::vector<ImageRecord> records;
  // space name -> path relative to the manifest directory
  std::map<std::string, std::string> embedding_files;
  std::map<std::string, EmbeddingMatrix> embeddings;
  // n x |categories| row-stochastic; present once categories are propagated.
  std::optional<Matrix<float>> cluster_probs;

  std::size_t size() const { return records.size(); }

  // Throws Error(kNotFound) for unknown ids.
  std::size_t index_of(std::string_view id) const;
  std::optional<std::size_t> find(std::string_view id) const;

  // Throws Error(kValidation) when the space is not loaded.
  const EmbeddingMatrix& embedding(std::string_view space) const;

  std::optional<std::size_t> category_index(std::string_view name) const;
  std::optional<std::size_t> location_index(std::string_view name) const;

  // Minimum over expert and propagated dates; day offsets are relative to it.
  std::optional<Date> min_date() const;
  std::int64_t day_offset(Date date) const;

  // Rebuilds the id lookup; call after mutating `records`.
  void reindex();

  bool operator==(const Corpus& other) const;

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

// Checks every manifest invariant against the loaded matrices. Throws
// Error(kValidation) naming the offending id, space or row.
void validate(const Corpus& corpus);

// Reads a manifest and all referenced embedding files.
Corpus load_corpus(const std::filesystem::path& manifest_path);

// Writes manifest.json plus one .nfem file per space into out_dir. Existing
// embedding file names are kept; missing ones default to "<space>.nfem".
void write_corpus(const Corpus& corpus, const std::filesystem::path& out_dir);

// Divides every row by its L2 norm. Throws on an all-zero row.
EmbeddingMatrix normalize_embeddings(EmbeddingMatrix matrix);

// True when every row norm is within 1e-4 of one.
bool rows_unit_norm(const Matrix<float>& values);

// NFEM binary: "NFEM", u32 LE rows, u32 LE cols, rows*cols f32 LE row-major.
Matrix<float> read_matrix_file(const std::filesystem::path& path);
void write_matrix_file(const std::filesystem::path& path,
                       const Matrix<float>& values);

inline constexpr std::string_view kManifestFileName = "manifest.json";

}  // namespace narrative::corpus

#endif  // NARRATIVE_CORPUS_HPP_
