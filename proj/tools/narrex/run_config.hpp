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

#ifndef NARREX_RUN_CONFIG_HPP_
#define NARREX_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "narrative/coherence.hpp"
#include "narrative/experiment.hpp"
#include "narrative/extract.hpp"
#include "narrative/semisup.hpp"
#include "narrative/service.hpp"
#include "narrative/synth.hpp"

namespace narrex {

// Every tunable of the pipeline in one declarative document.
struct RunConfig {
  narrative::semisup::SpreadParams spread;
  narrative::coherence::GraphParams graph;
  std::string space = std::string(narrative::corpus::kHighSpace);
  std::size_t k = 0;
  double mincover = 0.2;
  bool itf = false;
  narrative::extract::SolverBackend solver = narrative::extract::SolverBackend::kCombinatorial;
  double timeout_seconds = 60.0;
  std::optional<std::uint64_t> tie_break_seed;
  std::size_t trials = 20;
  std::vector<std::size_t> lengths = {5, 10, 15, 20, 25, 30};
  std::vector<std::string> spaces = {"high", "low"};
  std::uint64_t seed = 0;
  narrative::synth::SynthConfig synth;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  std::size_t page_size = 50;

  narrative::extract::ExtractionParams extraction(const std::string& source,
                                                  const std::string& target) const;
  narrative::evaluate::ExperimentConfig experiment() const;
  narrative::synth::SynthConfig synth_config() const;
  narrative::service::ServiceConfig service() const;
};

struct Field {
  std::string name;
  std::string domain;
  std::function<void(RunConfig&, const nlohmann::json&)> set;
  std::function<nlohmann::json(const RunConfig&)> get;
};

const std::vector<Field>& fields();

// Applies a JSON object; unknown keys and out-of-domain values throw
// narrative::Error(kValidation).
void apply(RunConfig& config, const nlohmann::json& doc);
void apply_file(RunConfig& config, const std::filesystem::path& path);
// "key=value" with value parsed as JSON when possible, else as a string.
void apply_assignment(RunConfig& config, const std::string& assignment);
void set_field(RunConfig& config, const std::string& key, const std::string& value);

nlohmann::json to_json(const RunConfig& config);

// Table of fields and domains for --help.
std::string describe_fields();

}  // namespace narrex

#endif  // NARREX_RUN_CONFIG_HPP_
