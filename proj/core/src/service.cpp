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

#include "narrative/service.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "narrative/dtw.hpp"
#include "narrative/error.hpp"
#include "narrative/extract.hpp"

namespace narrative::service {
namespace {

using nlohmann::json;

json parse_body(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kValidation, "request body is not valid JSON");
  }
  return doc;
}

bool parse_bool(const std::string& text, const std::string& field) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0" || text.empty()) return false;
  throw Error(ErrorCode::kValidation, "expected a boolean", {{"field", field}, {"value", text}});
}

std::size_t parse_count(const std::string& text, const std::string& field) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used == text.size() && v >= 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kValidation, "expected a non-negative integer",
              {{"field", field}, {"value", text}});
}

std::string content_type_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  return "application/octet-stream";
}

bool is_propagated(const corpus::Corpus& c) {
  return std::all_of(c.records.begin(), c.records.end(), [](const corpus::ImageRecord& r) {
    return r.effective_category() && r.effective_date();
  });
}

Response error_response(const Error& e) {
  return {status_for(e.code()), e.to_json(), std::nullopt, "application/json"};
}

}  // namespace

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kInfeasible:
      return 422;
    case ErrorCode::kTimeout:
      return 504;
    case ErrorCode::kIo:
    case ErrorCode::kNoCorpus:
    case ErrorCode::kInternal:
      break;
  }
  return 500;
}

Api::Api(ServiceConfig config) : config_(std::move(config)) {}

void Api::load(corpus::Corpus c, std::filesystem::path root) {
  corpus::validate(c);
  if (!is_propagated(c)) c = semisup::propagate(std::move(c), config_.spread).corpus;
  corpus_ = std::make_shared<const corpus::Corpus>(std::move(c));
  root_ = std::move(root);
  std::lock_guard lock(cache_mutex_);
  cache_.clear();
}

const corpus::Corpus& Api::corpus() const {
  if (!corpus_) throw Error(ErrorCode::kNoCorpus, "no corpus is loaded");
  return *corpus_;
}

std::shared_ptr<const coherence::CoherenceGraph> Api::graph_for(const std::string& space,
                                                                bool itf) {
  const auto& c = corpus();
  std::lock_guard lock(cache_mutex_);
  auto key = std::make_pair(space, itf);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  auto g = coherence::build_graph(c, space, config_.graph);
  if (itf) g = coherence::apply_itf_weighting(std::move(g), c);
  auto ptr = std::make_shared<const coherence::CoherenceGraph>(std::move(g));
  cache_.emplace(key, ptr);
  return ptr;
}

Response Api::handle(const std::string& method, const std::string& path,
                     const Query& query, const std::string& body) {
  try {
    if (method == "GET") {
      if (path == "/api/images") return images(query);
      const std::string prefix = "/api/images/";
      const std::string suffix = "/file";
      if (path.size() > prefix.size() + suffix.size() && path.starts_with(prefix) &&
          path.ends_with(suffix)) {
        return image_file(path.substr(prefix.size(),
                                      path.size() - prefix.size() - suffix.size()));
      }
      if (path == "/api/clusters") return clusters();
      if (path == "/api/graph") return graph(query);
      if (path == "/api/history") return history();
    } else if (method == "POST") {
      if (path == "/api/extract") return extract(body);
      if (path == "/api/feasibility") return feasibility(body);
      if (path == "/api/evaluate") return evaluate(body);
    } else if (method == "OPTIONS") {
      return {204, nullptr, std::string(), "text/plain"};
    }
    throw Error(ErrorCode::kNotFound, "no such endpoint",
                {{"method", method}, {"path", path}});
  } catch (const Error& e) {
    return error_response(e);
  } catch (const std::exception& e) {
    return error_response(Error(ErrorCode::kInternal, e.what()));
  }
}

Response Api::images(const Query& query) const {
  const auto& c = corpus();
  std::size_t page = 0;
  std::size_t page_size = config_.page_size;
  std::optional<std::string> category;
  std::optional<corpus::Date> from, to;
  for (const auto& [key, value] : query) {
    if (key == "page") {
      page = parse_count(value, key);
    } else if (key == "page_size") {
      page_size = parse_count(value, key);
      if (page_size == 0 || page_size > 1000) {
        throw Error(ErrorCode::kValidation, "page_size must lie in [1, 1000]",
                    {{"field", key}});
      }
    } else if (key == "category") {
      if (!c.category_index(value)) {
        throw Error(ErrorCode::kValidation, "unknown category", {{"category", value}});
      }
      category = value;
    } else if (key == "from") {
      from = corpus::parse_iso_date(value);
    } else if (key == "to") {
      to = corpus::parse_iso_date(value);
    } else {
      throw Error(ErrorCode::kValidation, "unknown query parameter", {{"field", key}});
    }
  }
  std::vector<std::size_t> selected;
  for (std::size_t i : coherence::temporal_order(c)) {
    const auto& r = c.records[i];
    if (category && r.effective_category() != category) continue;
    const auto date = *r.effective_date();
    if ((from && date < *from) || (to && date > *to)) continue;
    selected.push_back(i);
  }
  json items = json::array();
  for (std::size_t k = page * page_size; k < selected.size() && k < (page + 1) * page_size; ++k) {
    const auto& r = c.records[selected[k]];
    items.push_back({{"id", r.id},
                     {"date", corpus::format_iso_date(*r.effective_date())},
                     {"category", *r.effective_category()},
                     {"location", r.location_tag ? json(*r.location_tag) : json(nullptr)},
                     {"expert_category", r.expert_category.has_value()},
                     {"expert_date", r.expert_date.has_value()},
                     {"thumbnail_url", r.file_ref ? json("/api/images/" + r.id + "/file")
                                                  : json(nullptr)}});
  }
  return {200,
          {{"total", selected.size()}, {"page", page}, {"page_size", page_size}, {"items", items}},
          std::nullopt,
          "application/json"};
}

Response Api::image_file(const std::string& id) const {
  const auto& c = corpus();
  const auto& r = c.records[c.index_of(id)];
  if (!r.file_ref) {
    throw Error(ErrorCode::kNotFound, "record has no image file", {{"id", id}});
  }
  const auto path = root_ / *r.file_ref;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kNotFound, "image file is missing",
                {{"id", id}, {"path", path.string()}});
  }
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return {200, nullptr, bytes.str(), content_type_for(path)};
}

Response Api::clusters() const {
  const auto& c = corpus();
  std::vector<std::size_t> counts(c.categories.size(), 0);
  for (const auto& r : c.records) ++counts[*c.category_index(*r.effective_category())];
  json categories = json::array();
  for (std::size_t k = 0; k < c.categories.size(); ++k) {
    categories.push_back({{"name", c.categories[k]}, {"count", counts[k]}});
  }
  json distribution = json::array();
  if (c.cluster_probs) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto row = c.cluster_probs->row(c.records[i].cluster_probs_row_index.value_or(i));
      const auto top = std::max_element(row.begin(), row.end());
      double entropy = 0.0;
      for (float p : row) {
        if (p > 0.0f) entropy -= p * std::log2(static_cast<double>(p));
      }
      distribution.push_back({{"id", c.records[i].id},
                              {"top_category", c.categories[static_cast<std::size_t>(top - row.begin())]},
                              {"top_probability", *top},
                              {"entropy_bits", entropy}});
    }
  }
  return {200,
          {{"categories", categories},
           {"total_clusters", extract::total_clusters(c)},
           {"distribution", distribution}},
          std::nullopt,
          "application/json"};
}

Response Api::graph(const Query& query) {
  std::string space(corpus::kHighSpace);
  bool itf = false;
  for (const auto& [key, value] : query) {
    if (key == "space") {
      if (!value.empty()) space = value;
    } else if (key == "itf") {
      itf = parse_bool(value, key);
    } else {
      throw Error(ErrorCode::kValidation, "unknown query parameter", {{"field", key}});
    }
  }
  const auto g = graph_for(space, itf);
  return {200, coherence::graph_to_json(*g, corpus()), std::nullopt, "application/json"};
}

Response Api::extract(const std::string& body) {
  const auto params = extract::params_from_json(parse_body(body));
  const auto& c = corpus();
  const auto g = graph_for(params.space_name, params.itf);
  const auto map = extract::extract_map(*g, c, params);
  json result = extract::map_to_json(map);
  {
    std::lock_guard lock(history_mutex_);
    history_.push_back({{"id", history_.size() + 1},
                        {"params", extract::params_to_json(params)},
                        {"main_route", map.main_route},
                        {"mu_star", map.mu_star}});
  }
  return {200, result, std::nullopt, "application/json"};
}

Response Api::feasibility(const std::string& body) {
  const auto params = extract::params_from_json(parse_body(body));
  const auto g = graph_for(params.space_name, params.itf);
  const auto report = extract::check_feasibility(*g, corpus(), params);
  return {200, extract::feasibility_to_json(report), std::nullopt, "application/json"};
}

Response Api::evaluate(const std::string& body) const {
  const json doc = parse_body(body);
  std::vector<std::string> timeline, baseline;
  std::string space(corpus::kHighSpace);
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "timeline") {
        timeline = value.get<std::vector<std::string>>();
      } else if (key == "baseline") {
        baseline = value.get<std::vector<std::string>>();
      } else if (key == "space") {
        space = value.get<std::string>();
      } else {
        throw Error(ErrorCode::kValidation, "unknown request field '" + key + "'",
                    {{"field", key}});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed evaluate request: ") + e.what());
  }
  const auto& c = corpus();
  std::vector<std::string> unknown;
  for (const auto* ids : {&timeline, &baseline}) {
    for (const auto& id : *ids) {
      if (!c.find(id)) unknown.push_back(id);
    }
  }
  if (!unknown.empty()) {
    throw Error(ErrorCode::kValidation, "unknown ids in evaluate request",
                {{"unknown_ids", unknown}});
  }
  const auto alignment = evaluate::dtw(evaluate::sequence_of(c, timeline, space),
                                       evaluate::sequence_of(c, baseline, space));
  return {200, evaluate::alignment_to_json(alignment), std::nullopt, "application/json"};
}

Response Api::history() const {
  std::lock_guard lock(history_mutex_);
  return {200, {{"extractions", history_}}, std::nullopt, "application/json"};
}

void serve(Api& api) {
  httplib::Server server;
  const auto& config = api.config();
  server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  auto adapt = [&api](const httplib::Request& req, httplib::Response& res) {
    Query query;
    for (const auto& [key, value] : req.params) query[key] = value;
    const Response r = api.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    if (r.raw) {
      res.set_content(*r.raw, r.content_type);
    } else if (r.status != 204) {
      res.set_content(r.body.dump(), "application/json");
    }
  };
  server.Get(".*", adapt);
  server.Post(".*", adapt);
  server.Options(".*", adapt);
  if (!server.listen(config.host, config.port)) {
    throw Error(ErrorCode::kIo, "cannot listen on the configured address",
                {{"host", config.host}, {"port", config.port}});
  }
}

}  // namespace narrative::service
