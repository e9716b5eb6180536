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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "narrative/coherence.hpp"
#include "narrative/corpus.hpp"
#include "narrative/error.hpp"
#include "narrative/experiment.hpp"
#include "narrative/extract.hpp"
#include "narrative/report.hpp"
#include "narrative/semisup.hpp"
#include "narrative/service.hpp"
#include "narrative/synth.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using narrative::Error;
using narrative::ErrorCode;
using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kNotFound:
    case ErrorCode::kNoCorpus:
      return 2;
    case ErrorCode::kInfeasible:
      return 3;
    case ErrorCode::kIo:
      return 4;
    case ErrorCode::kTimeout:
      return 5;
    case ErrorCode::kInternal:
      break;
  }
  return 1;
}

fs::path manifest_path(const fs::path& corpus) {
  return fs::is_directory(corpus) ? corpus / narrative::corpus::kManifestFileName : corpus;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create output directory",
                {{"path", dir.string()}, {"reason", ec.message()}});
  }
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write file", {{"path", path.string()}});
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed", {{"path", path.string()}});
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open file", {{"path", path.string()}});
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw Error(ErrorCode::kValidation, "file is not valid JSON", {{"path", path.string()}});
  }
  return doc;
}

// Deterministic run log: no timestamps, so reruns stay byte-identical.
class Log {
 public:
  Log(fs::path path, std::string command) : path_(std::move(path)) {
    lines_.push_back("command: " + command);
  }
  void add(const std::string& line) { lines_.push_back(line); }
  void flush(const narrex::RunConfig& config) const {
    std::string text;
    for (const auto& l : lines_) text += l + '\n';
    text += "config: " + narrex::to_json(config).dump() + '\n';
    write_text(path_, text);
  }

 private:
  fs::path path_;
  std::vector<std::string> lines_;
};

narrative::corpus::Corpus load_propagated(const fs::path& corpus_path) {
  auto corpus = narrative::corpus::load_corpus(manifest_path(corpus_path));
  for (const auto& r : corpus.records) {
    if (!r.effective_category() || !r.effective_date()) {
      throw Error(ErrorCode::kValidation, "corpus is not propagated; run 'propagate' first",
                  {{"id", r.id}});
    }
  }
  return corpus;
}

struct Flags {
  // Subcommand flag -> RunConfig key; applied after the config file.
  std::map<std::string, std::string> overrides;
};

void bind(CLI::App* cmd, Flags& flags, const std::string& flag, const std::string& key,
          const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&flags, key](const std::string& v) { flags.overrides[key] = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"narrex: visual narrative extraction pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("\n" + narrex::describe_fields() +
             "\nThe config file path may also come from NARREX_CONFIG; flags win over the file."
             "\nExit codes: 0 ok, 2 validation, 3 infeasible, 4 I/O, 5 timeout, 1 internal.");

  std::string config_path;
  std::vector<std::string> assignments;
  app.add_option("--config", config_path, "RunConfig JSON file");
  app.add_option("--set", assignments, "Override a RunConfig field: key=value")->take_all();

  Flags flags;
  std::string corpus_path;
  std::string out_dir;

  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a corpus into --out");
  std::string manifest;
  ingest->add_option("--manifest", manifest, "Input manifest.json")->required();
  ingest->add_option("--out", out_dir, "Output directory")->required();

  auto* propagate = app.add_subcommand("propagate", "Spread categories and dates from expert seeds");
  propagate->add_option("--corpus", corpus_path, "Corpus directory or manifest")->required();
  propagate->add_option("--out", out_dir, "Output directory")->required();
  bind(propagate, flags, "--alpha", "alpha", "Spreading alpha");
  bind(propagate, flags, "--knn-k", "knn_k", "k-NN neighbors");
  bind(propagate, flags, "--location-weight", "location_weight", "One-hot location weight");

  auto* graph = app.add_subcommand("graph", "Build the coherence graph (graph.json)");
  graph->add_option("--corpus", corpus_path, "Propagated corpus")->required();
  graph->add_option("--out", out_dir, "Output directory")->required();
  bind(graph, flags, "--space", "space", "Embedding space");
  bind(graph, flags, "--itf", "itf", "Apply ITF weighting (true/false)");
  bind(graph, flags, "--top-k-out", "top_k_out", "Out-edges kept per node, or null");
  bind(graph, flags, "--window-days", "window_days", "Temporal window, or null");

  auto* extract = app.add_subcommand("extract", "Extract the main route (map.json)");
  std::string source, target, graph_file;
  extract->add_option("--corpus", corpus_path, "Propagated corpus")->required();
  extract->add_option("--out", out_dir, "Output directory")->required();
  extract->add_option("--source", source, "Source record id")->required();
  extract->add_option("--target", target, "Target record id")->required();
  extract->add_option("--graph", graph_file, "Prebuilt graph.json (default: build)");
  bind(extract, flags, "--k", "k", "Route length, endpoints included");
  bind(extract, flags, "--mincover", "mincover", "Minimum cluster coverage fraction");
  bind(extract, flags, "--space", "space", "Embedding space");
  bind(extract, flags, "--itf", "itf", "ITF weighting (true/false)");
  bind(extract, flags, "--solver", "solver", "combinatorial or milp");
  bind(extract, flags, "--tie-break-seed", "tie_break_seed", "Tie-break permutation seed");
  bind(extract, flags, "--timeout", "timeout_seconds", "Solver time limit in seconds");

  auto* evaluate = app.add_subcommand("evaluate", "Run the NM vs RS experiment (report.md|csv|json)");
  std::string baselines_path;
  evaluate->add_option("--corpus", corpus_path, "Propagated corpus")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  evaluate->add_option("--baselines", baselines_path, "Baseline timelines JSON")->required();
  bind(evaluate, flags, "--trials", "trials", "Trials per cell");
  bind(evaluate, flags, "--lengths", "lengths", "JSON list of lengths");
  bind(evaluate, flags, "--spaces", "spaces", "JSON list of spaces");
  bind(evaluate, flags, "--mincover", "mincover", "Minimum cluster coverage fraction");
  bind(evaluate, flags, "--seed", "seed", "Experiment seed");

  auto* synth = app.add_subcommand("synth", "Generate a planted-narrative corpus and baselines.json");
  synth->add_option("--out", out_dir, "Output directory")->required();
  bind(synth, flags, "--n", "synth_n", "Record count");
  bind(synth, flags, "--c", "synth_c", "Cluster count");
  bind(synth, flags, "--d", "synth_d", "Embedding dimension");
  bind(synth, flags, "--noise-sigma", "synth_noise_sigma", "Noise per coordinate, or null");
  bind(synth, flags, "--label-fraction", "synth_label_fraction", "Expert-labeled fraction");
  bind(synth, flags, "--seed", "seed", "Generator seed");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API over a corpus");
  serve->add_option("--corpus", corpus_path, "Corpus directory or manifest")->required();
  bind(serve, flags, "--host", "host", "Listen address");
  bind(serve, flags, "--port", "port", "Listen port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Error(ErrorCode::kValidation, e.what(), {{"reason", "bad_arguments"}}).to_json().dump()
              << '\n';
    return 2;
  }

  try {
    narrex::RunConfig config;
    if (config_path.empty()) {
      if (const char* env = std::getenv("NARREX_CONFIG"); env && *env) config_path = env;
    }
    if (!config_path.empty()) narrex::apply_file(config, config_path);
    for (const auto& a : assignments) narrex::apply_assignment(config, a);
    for (const auto& [key, value] : flags.overrides) narrex::set_field(config, key, value);

    if (*ingest) {
      auto corpus = narrative::corpus::load_corpus(manifest);
      Log log(fs::path(out_dir) / "ingest.log", "ingest");
      for (auto& [space, emb] : corpus.embeddings) {
        if (!emb.normalized) {
          emb = narrative::corpus::normalize_embeddings(std::move(emb));
          log.add("normalized space " + space);
        }
      }
      ensure_dir(out_dir);
      narrative::corpus::write_corpus(corpus, out_dir);
      log.add("records: " + std::to_string(corpus.size()));
      log.flush(config);
    } else if (*propagate) {
      auto corpus = narrative::corpus::load_corpus(manifest_path(corpus_path));
      auto result = narrative::semisup::propagate(std::move(corpus), config.spread);
      ensure_dir(out_dir);
      narrative::corpus::write_corpus(result.corpus, out_dir);
      Log log(fs::path(out_dir) / "propagate.log", "propagate");
      log.add("records: " + std::to_string(result.corpus.size()));
      log.add("categories: converged=" + std::string(result.categories.converged ? "true" : "false") +
              " iterations=" + std::to_string(result.categories.iterations));
      log.add("dates: converged=" + std::string(result.dates.converged ? "true" : "false") +
              " iterations=" + std::to_string(result.dates.iterations));
      log.flush(config);
    } else if (*graph) {
      const auto corpus = load_propagated(corpus_path);
      auto g = narrative::coherence::build_graph(corpus, config.space, config.graph);
      if (config.itf) g = narrative::coherence::apply_itf_weighting(std::move(g), corpus);
      ensure_dir(out_dir);
      write_text(fs::path(out_dir) / "graph.json",
                 narrative::coherence::graph_to_json(g, corpus).dump(2) + "\n");
      Log log(fs::path(out_dir) / "graph.log", "graph");
      log.add("nodes: " + std::to_string(g.node_order.size()));
      log.add("edges: " + std::to_string(g.edges.size()));
      log.flush(config);
    } else if (*extract) {
      if (config.k == 0) {
        throw Error(ErrorCode::kValidation, "k is required (--k or config)", {{"field", "k"}});
      }
      const auto corpus = load_propagated(corpus_path);
      const auto params = config.extraction(source, target);
      narrative::coherence::CoherenceGraph g =
          graph_file.empty()
              ? narrative::coherence::build_graph(corpus, config.space, config.graph)
              : narrative::coherence::graph_from_json(read_json(graph_file), corpus);
      ensure_dir(out_dir);
      Log log(fs::path(out_dir) / "extract.log", "extract");
      try {
        const auto map = narrative::extract::extract_map(g, corpus, params);
        write_text(fs::path(out_dir) / "map.json",
                   narrative::extract::map_to_json(map).dump(2) + "\n");
        for (const auto& id : map.main_route) std::cout << id << '\n';
        log.add("mu_star: " + json(map.mu_star).dump());
        log.add("route: " + json(map.main_route).dump());
      } catch (const Error& e) {
        log.add("error: " + e.to_json().dump());
        log.flush(config);
        throw;
      }
      log.flush(config);
    } else if (*evaluate) {
      const auto corpus = load_propagated(corpus_path);
      const auto baselines = narrative::evaluate::load_baselines(baselines_path);
      const auto report = narrative::evaluate::run_experiment(corpus, baselines, config.experiment());
      ensure_dir(out_dir);
      using narrative::evaluate::ReportFormat;
      write_text(fs::path(out_dir) / "report.md",
                 narrative::evaluate::render_report(report, ReportFormat::kMarkdown));
      write_text(fs::path(out_dir) / "report.csv",
                 narrative::evaluate::render_report(report, ReportFormat::kCsv));
      write_text(fs::path(out_dir) / "report.json",
                 narrative::evaluate::render_report(report, ReportFormat::kJson));
      Log log(fs::path(out_dir) / "evaluate.log", "evaluate");
      log.add("cells: " + std::to_string(report.cells.size()));
      std::size_t failures = 0;
      for (const auto& c : report.cells) failures += c.failures;
      log.add("nm_failures: " + std::to_string(failures));
      log.flush(config);
    } else if (*synth) {
      const auto generated = narrative::synth::generate(config.synth_config());
      ensure_dir(out_dir);
      narrative::corpus::write_corpus(generated.corpus, out_dir);
      write_text(fs::path(out_dir) / "baselines.json",
                 narrative::evaluate::baselines_to_json(generated.ground_truth).dump(2) + "\n");
      Log log(fs::path(out_dir) / "synth.log", "synth");
      log.add("records: " + std::to_string(generated.corpus.size()));
      log.add("noise_sigma: " + json(config.synth_config().effective_noise()).dump());
      log.flush(config);
    } else if (*serve) {
      const fs::path manifest_file = manifest_path(corpus_path);
      narrative::service::Api api(config.service());
      api.load(narrative::corpus::load_corpus(manifest_file), manifest_file.parent_path());
      std::cerr << "listening on " << config.host << ':' << config.port << '\n';
      narrative::service::serve(api);
    }
  } catch (const Error& e) {
    std::cerr << e.to_json().dump() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << Error(ErrorCode::kInternal, e.what()).to_json().dump() << '\n';
    return 1;
  }
  return 0;
}
