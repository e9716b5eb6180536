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

#ifndef NARRATIVE_SERVICE_HPP_
#define NARRATIVE_SERVICE_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/coherence.hpp"
#include "narrative/corpus.hpp"
#include "narrative/error.hpp"
#include "narrative/semisup.hpp"

namespace narrative::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  coherence::GraphParams graph;
  semisup::SpreadParams spread;  // used only when the corpus is unpropagated
  std::size_t page_size = 50;
};

struct Response {
  int status = 200;
  nlohmann::json body;
  // Set for binary payloads (image files); body is ignored then.
  std::optional<std::string> raw;
  std::string content_type = "application/json";
};

using Query = std::map<std::string, std::string>;

// Transport-independent request handling; serve() adapts it to HTTP.
class Api {
 public:
  explicit Api(ServiceConfig config = {});

  // root resolves file_ref paths. Runs propagation when some record lacks
  // an effective category or date.
  void load(corpus::Corpus corpus, std::filesystem::path root = {});
  bool loaded() const { return corpus_ != nullptr; }

  Response handle(const std::string& method, const std::string& path,
                  const Query& query, const std::string& body);

  const ServiceConfig& config() const { return config_; }

 private:
  Response images(const Query& query) const;
  Response image_file(const std::string& id) const;
  Response clusters() const;
  Response graph(const Query& query);
  Response extract(const std::string& body);
  Response feasibility(const std::string& body);
  Response evaluate(const std::string& body) const;
  Response history() const;

  const corpus::Corpus& corpus() const;
  std::shared_ptr<const coherence::CoherenceGraph> graph_for(const std::string& space,
                                                             bool itf);

  ServiceConfig config_;
  std::shared_ptr<const corpus::Corpus> corpus_;
  std::filesystem::path root_;
  std::mutex cache_mutex_;
  std::map<std::pair<std::string, bool>, std::shared_ptr<const coherence::CoherenceGraph>>
      cache_;
  mutable std::mutex history_mutex_;
  std::vector<nlohmann::json> history_;
};

// Maps an error code to its HTTP status.
int status_for(ErrorCode code);

// Blocks serving the API over HTTP/1.1 until the process is stopped.
void serve(Api& api);

}  // namespace narrative::service

#endif  // NARRATIVE_SERVICE_HPP_
