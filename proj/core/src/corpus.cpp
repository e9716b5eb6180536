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

#include "narrative/corpus.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "narrative/error.hpp"

namespace narrative::corpus {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::array<char, 4> kMagic = {'N', 'F', 'E', 'M'};
constexpr double kUnitNormTolerance = 1e-4;

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xFFu));
  }
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::optional<std::string> optional_string(const json& record,
                                           const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::kValidation,
                std::string("field '") + key + "' must be a string",
                {{"field", key}});
  }
  return it->get<std::string>();
}

std::optional<Date> optional_date(const json& record, const char* key) {
  auto text = optional_string(record, key);
  if (!text) return std::nullopt;
  return parse_iso_date(*text);
}

std::vector<std::string> string_list(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw Error(ErrorCode::kValidation,
                std::string("manifest is missing '") + key + "'",
                {{"field", key}});
  }
  if (!it->is_array()) {
    throw Error(ErrorCode::kValidation,
                std::string("manifest field '") + key + "' must be a list",
                {{"field", key}});
  }
  std::vector<std::string> out;
  for (const auto& v : *it) out.push_back(v.get<std::string>());
  return out;
}

ImageRecord record_from_json(const json& j) {
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
    throw Error(ErrorCode::kValidation, "record without a string id");
  }
  ImageRecord r;
  r.id = j["id"].get<std::string>();
  try {
    r.file_ref = optional_string(j, "file_ref");
    r.location_tag = optional_string(j, "location_tag");
    r.expert_category = optional_string(j, "expert_category");
    r.expert_date = optional_date(j, "expert_date");
    r.propagated_category = optional_string(j, "propagated_category");
    r.propagated_date = optional_date(j, "propagated_date");
  } catch (const Error& e) {
    json detail = e.detail();
    detail["id"] = r.id;
    throw Error(e.code(), "record '" + r.id + "': " + e.what(), detail);
  }
  if (auto it = j.find("cluster_probs_row_index");
      it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) {
      throw Error(ErrorCode::kValidation,
                  "record '" + r.id + "': cluster_probs_row_index must be a "
                  "non-negative integer",
                  {{"id", r.id}});
    }
    r.cluster_probs_row_index = it->get<std::size_t>();
  }
  return r;
}

json record_to_json(const ImageRecord& r) {
  json j = {{"id", r.id}};
  auto put = [&j](const char* key, const auto& value) {
    if (value) j[key] = *value;
  };
  put("file_ref", r.file_ref);
  put("location_tag", r.location_tag);
  put("expert_category", r.expert_category);
  if (r.expert_date) j["expert_date"] = format_iso_date(*r.expert_date);
  put("propagated_category", r.propagated_category);
  if (r.propagated_date) {
    j["propagated_date"] = format_iso_date(*r.propagated_date);
  }
  put("cluster_probs_row_index", r.cluster_probs_row_index);
  return j;
}

std::string default_file_name(const std::string& space) {
  return space + ".nfem";
}

}  // namespace

Date parse_iso_date(std::string_view text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  const std::string s(text);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
      std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw Error(ErrorCode::kValidation, "malformed date '" + s + "'",
                {{"value", s}});
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) {
    throw Error(ErrorCode::kValidation, "invalid calendar date '" + s + "'",
                {{"value", s}});
  }
  return Date{ymd};
}

std::string format_iso_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::size_t Corpus::index_of(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw Error(ErrorCode::kNotFound, "unknown record id '" + std::string(id) + "'",
              {{"id", std::string(id)}});
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  if (index_.size() != records.size()) {
    // Lookup table is stale (records edited in place); fall back to a scan.
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].id == id) return i;
    }
    return std::nullopt;
  }
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const EmbeddingMatrix& Corpus::embedding(std::string_view space) const {
  auto it = embeddings.find(std::string(space));
  if (it == embeddings.end()) {
    throw Error(ErrorCode::kValidation,
                "embedding space '" + std::string(space) + "' is not loaded",
                {{"space", std::string(space)}});
  }
  return it->second;
}

std::optional<std::size_t> Corpus::category_index(std::string_view name) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Corpus::location_index(std::string_view name) const {
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (locations[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<Date> Corpus::min_date() const {
  std::optional<Date> best;
  for (const auto& r : records) {
    for (const auto& d : {r.expert_date, r.propagated_date}) {
      if (d && (!best || *d < *best)) best = d;
    }
  }
  return best;
}

std::int64_t Corpus::day_offset(Date date) const {
  const auto origin = min_date();
  if (!origin) return 0;
  return (date - *origin).count();
}

void Corpus::reindex() {
  index_.clear();
  index_.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    index_.emplace(records[i].id, i);
  }
}

bool Corpus::operator==(const Corpus& other) const {
  return categories == other.categories && locations == other.locations &&
         records == other.records && embedding_files == other.embedding_files &&
         embeddings == other.embeddings && cluster_probs == other.cluster_probs;
}

bool rows_unit_norm(const Matrix<float>& values) {
  for (std::size_t i = 0; i < values.rows(); ++i) {
    double sq = 0.0;
    for (float v : values.row(i)) sq += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) return false;
  }
  return true;
}

void validate(const Corpus& corpus) {
  std::set<std::string> seen;
  std::size_t with_category = 0;
  std::size_t with_date = 0;
  const auto n = corpus.records.size();
  for (const auto& r : corpus.records) {
    if (r.id.empty()) throw Error(ErrorCode::kValidation, "empty record id");
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::kValidation, "duplicate record id '" + r.id + "'",
                  {{"id", r.id}, {"reason", "duplicate_id"}});
    }
    for (const auto* cat : {&r.expert_category, &r.propagated_category}) {
      if (*cat && !corpus.category_index(**cat)) {
        throw Error(ErrorCode::kValidation,
                    "record '" + r.id + "' has unknown category '" + **cat + "'",
                    {{"id", r.id}, {"value", **cat},
                     {"reason", "unknown_category"}});
      }
    }
    if (r.location_tag && !corpus.location_index(*r.location_tag)) {
      throw Error(ErrorCode::kValidation,
                  "record '" + r.id + "' has unknown location '" +
                      *r.location_tag + "'",
                  {{"id", r.id}, {"value", *r.location_tag},
                   {"reason", "unknown_location"}});
    }
    if (r.cluster_probs_row_index && *r.cluster_probs_row_index >= n) {
      throw Error(ErrorCode::kValidation,
                  "record '" + r.id + "' has cluster row index out of range",
                  {{"id", r.id}, {"reason", "cluster_row_out_of_range"}});
    }
    if (r.expert_category) ++with_category;
    if (r.expert_date) ++with_date;
  }
  if (with_category < 1) {
    throw Error(ErrorCode::kValidation,
                "at least one record needs an expert category",
                {{"reason", "no_category_seeds"}});
  }
  if (with_date < 2) {
    throw Error(ErrorCode::kValidation,
                "at least two records need an expert date",
                {{"reason", "too_few_date_seeds"}});
  }
  for (const auto& [space, m] : corpus.embeddings) {
    if (m.n() != n) {
      throw Error(ErrorCode::kValidation,
                  "embedding space '" + space + "' has " +
                      std::to_string(m.n()) + " rows for " + std::to_string(n) +
                      " records",
                  {{"space", space}, {"rows", m.n()}, {"records", n},
                   {"reason", "row_count_mismatch"}});
    }
    if (m.d() < 2) {
      throw Error(ErrorCode::kValidation,
                  "embedding space '" + space + "' needs at least 2 columns",
                  {{"space", space}, {"reason", "dimension_too_small"}});
    }
    for (std::size_t i = 0; i < m.n(); ++i) {
      bool all_zero = true;
      for (float v : m.row(i)) all_zero = all_zero && v == 0.0f;
      if (all_zero) {
        throw Error(ErrorCode::kValidation,
                    "embedding space '" + space + "' row " + std::to_string(i) +
                        " is all zeros",
                    {{"space", space}, {"row", i},
                     {"id", corpus.records[i].id}, {"reason", "zero_row"}});
      }
    }
  }
  if (corpus.cluster_probs) {
    const auto& p = *corpus.cluster_probs;
    if (p.rows() != n || p.cols() != corpus.categories.size()) {
      throw Error(ErrorCode::kValidation,
                  "cluster distribution shape does not match the corpus",
                  {{"rows", p.rows()}, {"cols", p.cols()},
                   {"reason", "row_count_mismatch"}});
    }
  }
}

Matrix<float> read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open matrix file " + path.string(),
                {{"path", path.string()}});
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || !std::equal(kMagic.begin(), kMagic.end(),
                                       bytes.begin())) {
    throw Error(ErrorCode::kValidation,
                "not an NFEM matrix file: " + path.string(),
                {{"path", path.string()}, {"reason", "bad_magic"}});
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t rows = get_u32(raw + 4);
  const std::size_t cols = get_u32(raw + 8);
  if (bytes.size() != 12 + rows * cols * 4) {
    throw Error(ErrorCode::kValidation,
                "truncated or oversized matrix file " + path.string(),
                {{"path", path.string()}, {"reason", "size_mismatch"}});
  }
  std::vector<float> data(rows * cols);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = std::bit_cast<float>(get_u32(raw + 12 + 4 * k));
  }
  return Matrix<float>(rows, cols, std::move(data));
}

void write_matrix_file(const std::filesystem::path& path,
                       const Matrix<float>& values) {
  std::string out(kMagic.begin(), kMagic.end());
  out.reserve(12 + values.data().size() * 4);
  put_u32(out, static_cast<std::uint32_t>(values.rows()));
  put_u32(out, static_cast<std::uint32_t>(values.cols()));
  for (float v : values.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f || !f.write(out.data(), static_cast<std::streamsize>(out.size()))) {
    throw Error(ErrorCode::kIo, "cannot write matrix file " + path.string(),
                {{"path", path.string()}});
  }
}

EmbeddingMatrix normalize_embeddings(EmbeddingMatrix matrix) {
  for (std::size_t i = 0; i < matrix.n(); ++i) {
    auto row = matrix.values.row(i);
    double sq = 0.0;
    for (float v : row) sq += static_cast<double>(v) * v;
    if (sq == 0.0) {
      throw Error(ErrorCode::kValidation,
                  "cannot normalize all-zero row " + std::to_string(i),
                  {{"row", i}, {"space", matrix.space_name},
                   {"reason", "zero_row"}});
    }
    const double norm = std::sqrt(sq);
    for (float& v : row) v = static_cast<float>(v / norm);
  }
  matrix.normalized = true;
  return matrix;
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open manifest " + manifest_path.string(),
                {{"path", manifest_path.string()}});
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kValidation,
                "manifest is not valid JSON: " + std::string(e.what()),
                {{"path", manifest_path.string()}});
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::kValidation, "manifest must be a JSON object");
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "categories" && key != "locations" && key != "records" &&
        key != "embedding_files") {
      throw Error(ErrorCode::kValidation, "unknown manifest key '" + key + "'",
                  {{"field", key}});
    }
  }

  Corpus c;
  c.categories = string_list(doc, "categories");
  c.locations = doc.contains("locations") ? string_list(doc, "locations")
                                          : std::vector<std::string>{};
  if (!doc.contains("records") || !doc["records"].is_array()) {
    throw Error(ErrorCode::kValidation, "manifest needs a 'records' list");
  }
  for (const auto& r : doc["records"]) c.records.push_back(record_from_json(r));

  const fs::path base = manifest_path.parent_path();
  if (auto it = doc.find("embedding_files"); it != doc.end()) {
    for (const auto& [space, file] : it->items()) {
      c.embedding_files[space] = file.get<std::string>();
    }
  }
  for (const auto& [space, file] : c.embedding_files) {
    const fs::path p = base / file;
    if (!fs::exists(p)) {
      throw Error(ErrorCode::kIo, "missing embedding file " + p.string(),
                  {{"path", p.string()}, {"space", space}});
    }
    Matrix<float> values = read_matrix_file(p);
    if (space == kClusterSpace) {
      c.cluster_probs = std::move(values);
      continue;
    }
    EmbeddingMatrix m{space, std::move(values), false};
    m.normalized = rows_unit_norm(m.values);
    c.embeddings.emplace(space, std::move(m));
  }
  c.reindex();
  validate(c);
  return c;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw Error(ErrorCode::kIo,
                "cannot create output directory " + out_dir.string(),
                {{"path", out_dir.string()}});
  }
  json doc;
  doc["categories"] = corpus.categories;
  doc["locations"] = corpus.locations;
  doc["records"] = json::array();
  for (const auto& r : corpus.records) doc["records"].push_back(record_to_json(r));

  std::map<std::string, std::string> files;
  auto file_for = [&](const std::string& space) {
    auto it = corpus.embedding_files.find(space);
    if (it == corpus.embedding_files.end()) return default_file_name(space);
    const fs::path rel(it->second);
    if (rel.is_absolute() || rel.empty()) return rel.filename().string();
    return rel.generic_string();
  };
  auto emit = [&](const std::string& space, const Matrix<float>& values) {
    files[space] = file_for(space);
    const fs::path target = out_dir / files[space];
    fs::create_directories(target.parent_path(), ec);
    write_matrix_file(target, values);
  };
  for (const auto& [space, m] : corpus.embeddings) emit(space, m.values);
  if (corpus.cluster_probs) {
    emit(std::string(kClusterSpace), *corpus.cluster_probs);
  }
  doc["embedding_files"] = files;

  const fs::path manifest = out_dir / kManifestFileName;
  std::ofstream f(manifest, std::ios::trunc);
  if (!f || !(f << doc.dump(2) << '\n')) {
    throw Error(ErrorCode::kIo, "cannot write manifest " + manifest.string(),
                {{"path", manifest.string()}});
  }
}

}  // namespace narrative::corpus
