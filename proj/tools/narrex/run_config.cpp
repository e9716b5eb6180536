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

#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "narrative/error.hpp"

namespace narrex {
namespace {

using narrative::Error;
using narrative::ErrorCode;
using nlohmann::json;

[[noreturn]] void out_of_domain(const std::string& name, const std::string& domain,
                                const json& value) {
  throw Error(ErrorCode::kValidation,
              "config field '" + name + "' must be " + domain,
              {{"field", name}, {"value", value}, {"domain", domain}});
}

double number(const std::string& name, const json& v, const std::string& domain) {
  if (!v.is_number()) out_of_domain(name, domain, v);
  return v.get<double>();
}

std::uint64_t whole(const std::string& name, const json& v, const std::string& domain) {
  if (!v.is_number_integer() || v.get<long long>() < 0) out_of_domain(name, domain, v);
  return v.get<std::uint64_t>();
}

bool boolean(const std::string& name, const json& v) {
  if (!v.is_boolean()) out_of_domain(name, "true or false", v);
  return v.get<bool>();
}

std::string text(const std::string& name, const json& v) {
  if (!v.is_string() || v.get<std::string>().empty()) out_of_domain(name, "a non-empty string", v);
  return v.get<std::string>();
}

template <typename Pred>
double ranged(const std::string& name, const json& v, const std::string& domain, Pred ok) {
  const double x = number(name, v, domain);
  if (!ok(x)) out_of_domain(name, domain, v);
  return x;
}

template <typename Pred>
std::uint64_t counted(const std::string& name, const json& v, const std::string& domain, Pred ok) {
  const std::uint64_t x = whole(name, v, domain);
  if (!ok(x)) out_of_domain(name, domain, v);
  return x;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::vector<Field> build_fields() {
  std::vector<Field> f;
  auto add = [&f](std::string name, std::string domain, auto set, auto get) {
    f.push_back({std::move(name), std::move(domain), set, get});
  };

  add("alpha", "a number in (0, 1)",
      [](RunConfig& c, const json& v) {
        c.spread.alpha = ranged("alpha", v, "a number in (0, 1)", [](double x) { return x > 0 && x < 1; });
      },
      [](const RunConfig& c) { return json(c.spread.alpha); });
  add("tol", "a number > 0",
      [](RunConfig& c, const json& v) {
        c.spread.tol = ranged("tol", v, "a number > 0", [](double x) { return x > 0; });
      },
      [](const RunConfig& c) { return json(c.spread.tol); });
  add("max_iter", "an integer >= 1",
      [](RunConfig& c, const json& v) {
        c.spread.max_iter = counted("max_iter", v, "an integer >= 1", [](auto x) { return x >= 1; });
      },
      [](const RunConfig& c) { return json(c.spread.max_iter); });
  add("knn_k", "an integer >= 1 (clamped to n - 1)",
      [](RunConfig& c, const json& v) {
        c.spread.knn_k = counted("knn_k", v, "an integer >= 1 (clamped to n - 1)", [](auto x) { return x >= 1; });
      },
      [](const RunConfig& c) { return json(c.spread.knn_k); });
  add("sigma", "a number > 0, or null for the median k-NN distance",
      [](RunConfig& c, const json& v) {
        if (v.is_null()) {
          c.spread.sigma.reset();
        } else {
          c.spread.sigma = ranged("sigma", v, "a number > 0, or null", [](double x) { return x > 0; });
        }
      },
      [](const RunConfig& c) { return opt(c.spread.sigma); });
  add("location_weight", "a number >= 0",
      [](RunConfig& c, const json& v) {
        c.spread.location_weight = ranged("location_weight", v, "a number >= 0", [](double x) { return x >= 0; });
      },
      [](const RunConfig& c) { return json(c.spread.location_weight); });
  add("propagation_space", "an embedding space name",
      [](RunConfig& c, const json& v) { c.spread.space = text("propagation_space", v); },
      [](const RunConfig& c) { return json(c.spread.space); });
  add("coherence_mode", "\"geometric\" or \"arithmetic\"",
      [](RunConfig& c, const json& v) {
        c.graph.mode = narrative::coherence::coherence_mode_from_string(text("coherence_mode", v));
      },
      [](const RunConfig& c) { return json(narrative::coherence::to_string(c.graph.mode)); });
  add("window_days", "an integer >= 1, or null for unbounded",
      [](RunConfig& c, const json& v) {
        if (v.is_null()) {
          c.graph.window_days.reset();
        } else {
          c.graph.window_days = static_cast<int>(counted("window_days", v, "an integer >= 1, or null",
                                                         [](auto x) { return x >= 1 && x <= 1000000; }));
        }
      },
      [](const RunConfig& c) { return opt(c.graph.window_days); });
  add("top_k_out", "an integer >= 1, or null to keep every edge",
      [](RunConfig& c, const json& v) {
        if (v.is_null()) {
          c.graph.top_k_out.reset();
        } else {
          c.graph.top_k_out = counted("top_k_out", v, "an integer >= 1, or null", [](auto x) { return x >= 1; });
        }
      },
      [](const RunConfig& c) { return opt(c.graph.top_k_out); });
  add("successor_fallback", "true or false",
      [](RunConfig& c, const json& v) { c.graph.successor_fallback = boolean("successor_fallback", v); },
      [](const RunConfig& c) { return json(c.graph.successor_fallback); });
  add("space", "an embedding space name (graph and extraction)",
      [](RunConfig& c, const json& v) { c.space = text("space", v); },
      [](const RunConfig& c) { return json(c.space); });
  add("k", "an integer >= 2 (route length, endpoints included), or null",
      [](RunConfig& c, const json& v) {
        c.k = v.is_null() ? 0 : counted("k", v, "an integer >= 2", [](auto x) { return x >= 2; });
      },
      [](const RunConfig& c) { return c.k == 0 ? json(nullptr) : json(c.k); });
  add("mincover", "a number in [0, 1]",
      [](RunConfig& c, const json& v) {
        c.mincover = ranged("mincover", v, "a number in [0, 1]", [](double x) { return x >= 0 && x <= 1; });
      },
      [](const RunConfig& c) { return json(c.mincover); });
  add("itf", "true or false",
      [](RunConfig& c, const json& v) { c.itf = boolean("itf", v); },
      [](const RunConfig& c) { return json(c.itf); });
  add("solver", "\"combinatorial\" or \"milp\"",
      [](RunConfig& c, const json& v) {
        c.solver = narrative::extract::solver_backend_from_string(text("solver", v));
      },
      [](const RunConfig& c) { return json(narrative::extract::to_string(c.solver)); });
  add("timeout_seconds", "a number > 0",
      [](RunConfig& c, const json& v) {
        c.timeout_seconds = ranged("timeout_seconds", v, "a number > 0", [](double x) { return x > 0; });
      },
      [](const RunConfig& c) { return json(c.timeout_seconds); });
  add("tie_break_seed", "an unsigned integer, or null for id order",
      [](RunConfig& c, const json& v) {
        if (v.is_null()) {
          c.tie_break_seed.reset();
        } else {
          c.tie_break_seed = whole("tie_break_seed", v, "an unsigned integer, or null");
        }
      },
      [](const RunConfig& c) { return opt(c.tie_break_seed); });
  add("trials", "an integer >= 1",
      [](RunConfig& c, const json& v) {
        c.trials = counted("trials", v, "an integer >= 1", [](auto x) { return x >= 1; });
      },
      [](const RunConfig& c) { return json(c.trials); });
  add("lengths", "a list of integers >= 2",
      [](RunConfig& c, const json& v) {
        if (!v.is_array() || v.empty()) out_of_domain("lengths", "a non-empty list of integers >= 2", v);
        std::vector<std::size_t> out;
        for (const auto& x : v) {
          out.push_back(counted("lengths", x, "a list of integers >= 2", [](auto y) { return y >= 2; }));
        }
        c.lengths = out;
      },
      [](const RunConfig& c) { return json(c.lengths); });
  add("spaces", "a list of embedding space names",
      [](RunConfig& c, const json& v) {
        if (!v.is_array() || v.empty()) out_of_domain("spaces", "a non-empty list of space names", v);
        std::vector<std::string> out;
        for (const auto& x : v) out.push_back(text("spaces", x));
        c.spaces = out;
      },
      [](const RunConfig& c) { return json(c.spaces); });
  add("seed", "an unsigned integer (experiments and synth)",
      [](RunConfig& c, const json& v) { c.seed = whole("seed", v, "an unsigned integer"); },
      [](const RunConfig& c) { return json(c.seed); });
  add("synth_n", "an integer >= 2",
      [](RunConfig& c, const json& v) {
        c.synth.n = counted("synth_n", v, "an integer >= 2", [](auto x) { return x >= 2; });
      },
      [](const RunConfig& c) { return json(c.synth.n); });
  add("synth_c", "an integer >= 2",
      [](RunConfig& c, const json& v) {
        c.synth.c = counted("synth_c", v, "an integer >= 2", [](auto x) { return x >= 2; });
      },
      [](const RunConfig& c) { return json(c.synth.c); });
  add("synth_d", "an integer >= 2",
      [](RunConfig& c, const json& v) {
        c.synth.d = counted("synth_d", v, "an integer >= 2", [](auto x) { return x >= 2; });
      },
      [](const RunConfig& c) { return json(c.synth.d); });
  add("synth_stages", "a list of cluster indices in [0, synth_c), or [] for 0..c-1",
      [](RunConfig& c, const json& v) {
        if (!v.is_array()) out_of_domain("synth_stages", "a list of cluster indices", v);
        std::vector<std::size_t> out;
        for (const auto& x : v) out.push_back(whole("synth_stages", x, "a list of cluster indices"));
        c.synth.stages = out;
      },
      [](const RunConfig& c) { return json(c.synth.stages); });
  add("synth_noise_sigma", "a number >= 0, or null for the separation margin",
      [](RunConfig& c, const json& v) {
        if (v.is_null()) {
          c.synth.noise_sigma.reset();
        } else {
          c.synth.noise_sigma = ranged("synth_noise_sigma", v, "a number >= 0, or null", [](double x) { return x >= 0; });
        }
      },
      [](const RunConfig& c) { return opt(c.synth.noise_sigma); });
  add("synth_label_fraction", "a number in (0, 1]",
      [](RunConfig& c, const json& v) {
        c.synth.label_fraction = ranged("synth_label_fraction", v, "a number in (0, 1]",
                                        [](double x) { return x > 0 && x <= 1; });
      },
      [](const RunConfig& c) { return json(c.synth.label_fraction); });
  add("synth_date_span_days", "an integer >= 1",
      [](RunConfig& c, const json& v) {
        c.synth.date_span_days = static_cast<int>(counted("synth_date_span_days", v, "an integer >= 1",
                                                          [](auto x) { return x >= 1 && x <= 1000000; }));
      },
      [](const RunConfig& c) { return json(c.synth.date_span_days); });
  add("synth_min_angle_degrees", "a number in (0, 90]",
      [](RunConfig& c, const json& v) {
        c.synth.min_angle_degrees = ranged("synth_min_angle_degrees", v, "a number in (0, 90]",
                                           [](double x) { return x > 0 && x <= 90; });
      },
      [](const RunConfig& c) { return json(c.synth.min_angle_degrees); });
  add("synth_low_d", "an integer >= 0 (0 disables the low space)",
      [](RunConfig& c, const json& v) { c.synth.low_d = whole("synth_low_d", v, "an integer >= 0"); },
      [](const RunConfig& c) { return json(c.synth.low_d); });
  add("synth_location_fraction", "a number in [0, 1]",
      [](RunConfig& c, const json& v) {
        c.synth.location_fraction = ranged("synth_location_fraction", v, "a number in [0, 1]",
                                           [](double x) { return x >= 0 && x <= 1; });
      },
      [](const RunConfig& c) { return json(c.synth.location_fraction); });
  add("host", "a listen address",
      [](RunConfig& c, const json& v) { c.host = text("host", v); },
      [](const RunConfig& c) { return json(c.host); });
  add("port", "an integer in [1, 65535]",
      [](RunConfig& c, const json& v) {
        c.port = static_cast<int>(counted("port", v, "an integer in [1, 65535]",
                                          [](auto x) { return x >= 1 && x <= 65535; }));
      },
      [](const RunConfig& c) { return json(c.port); });
  add("cors_origin", "an origin string, \"*\" for any",
      [](RunConfig& c, const json& v) { c.cors_origin = text("cors_origin", v); },
      [](const RunConfig& c) { return json(c.cors_origin); });
  add("page_size", "an integer in [1, 1000]",
      [](RunConfig& c, const json& v) {
        c.page_size = counted("page_size", v, "an integer in [1, 1000]", [](auto x) { return x >= 1 && x <= 1000; });
      },
      [](const RunConfig& c) { return json(c.page_size); });
  return f;
}

}  // namespace

const std::vector<Field>& fields() {
  static const std::vector<Field> table = build_fields();
  return table;
}

void apply(RunConfig& config, const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::kValidation, "config document must be a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.name == key; });
    if (it == table.end()) {
      throw Error(ErrorCode::kValidation, "unknown config field '" + key + "'", {{"field", key}});
    }
    it->set(config, value);
  }
}

void apply_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open config file", {{"path", path.string()}});
  }
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kValidation, "config file is not valid JSON", {{"path", path.string()}});
  }
  narrex::apply(config, doc);
}

void set_field(RunConfig& config, const std::string& key, const std::string& value) {
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  json doc = json::object();
  doc[key] = std::move(parsed);
  narrex::apply(config, doc);
}

void apply_assignment(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kValidation, "--set expects key=value", {{"value", assignment}});
  }
  set_field(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

json to_json(const RunConfig& config) {
  json out = json::object();
  for (const auto& f : fields()) out[f.name] = f.get(config);
  return out;
}

std::string describe_fields() {
  const RunConfig defaults;
  std::ostringstream out;
  out << "RunConfig fields (JSON config file keys, or --set key=value):\n";
  for (const auto& f : fields()) {
    out << "  " << f.name << std::string(f.name.size() < 26 ? 26 - f.name.size() : 1, ' ')
        << f.domain << "; default " << f.get(defaults).dump() << '\n';
  }
  return out.str();
}

narrative::extract::ExtractionParams RunConfig::extraction(const std::string& source,
                                                           const std::string& target) const {
  narrative::extract::ExtractionParams p;
  p.source_id = source;
  p.target_id = target;
  p.k = k;
  p.mincover = mincover;
  p.space_name = space;
  p.itf = itf;
  p.tie_break_seed = tie_break_seed;
  p.timeout_seconds = timeout_seconds;
  p.backend = solver;
  return p;
}

narrative::evaluate::ExperimentConfig RunConfig::experiment() const {
  narrative::evaluate::ExperimentConfig e;
  e.trials = trials;
  e.lengths = lengths;
  e.spaces = spaces;
  e.mincover = mincover;
  e.itf = itf;
  e.seed = seed;
  e.timeout_seconds = timeout_seconds;
  e.backend = solver;
  e.graph = graph;
  return e;
}

narrative::synth::SynthConfig RunConfig::synth_config() const {
  auto s = synth;
  s.seed = seed;
  return s;
}

narrative::service::ServiceConfig RunConfig::service() const {
  narrative::service::ServiceConfig s;
  s.host = host;
  s.port = port;
  s.cors_origin = cors_origin;
  s.graph = graph;
  s.spread = spread;
  s.page_size = page_size;
  return s;
}

}  // namespace narrex
