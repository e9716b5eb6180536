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

#include "narrative/extract.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "narrative/error.hpp"
#include "narrative/milp.hpp"
#include "narrative/rng.hpp"

namespace narrative::extract {
namespace {

using coherence::CoherenceEdge;
using coherence::CoherenceGraph;
using corpus::Corpus;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kFullMask = ~std::uint64_t{0};

struct Deadline {
  Clock::time_point start = Clock::now();
  Clock::time_point end;

  explicit Deadline(double seconds)
      : end(start + std::chrono::duration_cast<Clock::duration>(
                        std::chrono::duration<double>(seconds))) {}
  bool passed() const { return Clock::now() > end; }
  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start).count();
  }
};

struct TimedOut {};

struct Arc {
  std::size_t to = 0;  // local index
  double coherence = 0.0;
  std::size_t edge = 0;  // index into graph.edges
};

// The source..target slice of the graph in local (rank-offset) indices.
struct Instance {
  const CoherenceGraph* graph = nullptr;
  const Corpus* corpus = nullptr;
  std::size_t m = 0;
  std::vector<std::size_t> record;  // local -> record index
  std::vector<std::vector<Arc>> out;
  std::vector<int> category;        // local -> compact category id
  std::vector<std::size_t> category_corpus_index;  // compact -> corpus index
  std::vector<std::uint64_t> key;   // local tie-break key
  std::size_t k = 0;
  std::size_t required = 0;
  std::size_t total = 0;
  std::size_t arc_count = 0;

  std::size_t source() const { return 0; }
  std::size_t target() const { return m - 1; }
};

std::size_t category_of(const Corpus& corpus, std::size_t record) {
  const auto& r = corpus.records[record];
  const auto& cat = r.effective_category();
  if (!cat) {
    throw Error(ErrorCode::kValidation,
                "record '" + r.id + "' has no effective category",
                {{"id", r.id}, {"reason", "missing_category"}});
  }
  return *corpus.category_index(*cat);
}

std::vector<std::uint64_t> record_keys(const Corpus& corpus,
                                       std::optional<std::uint64_t> seed) {
  std::vector<std::size_t> by_id(corpus.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) {
    return corpus.records[a].id < corpus.records[b].id;
  });
  std::vector<std::uint64_t> labels(corpus.size());
  std::iota(labels.begin(), labels.end(), std::uint64_t{0});
  if (seed) {
    Rng rng(*seed);
    rng.shuffle(labels);
  }
  std::vector<std::uint64_t> key(corpus.size());
  for (std::size_t pos = 0; pos < by_id.size(); ++pos) key[by_id[pos]] = labels[pos];
  return key;
}

Instance make_instance(const CoherenceGraph& graph, const Corpus& corpus,
                       const ExtractionParams& params) {
  Instance in;
  in.graph = &graph;
  in.corpus = &corpus;
  const std::size_t s = corpus.index_of(params.source_id);
  const std::size_t t = corpus.index_of(params.target_id);
  const std::size_t first = graph.rank[s];
  const std::size_t last = graph.rank[t];
  in.m = last - first + 1;
  in.k = params.k;
  in.total = total_clusters(corpus);
  in.required = required_clusters(params.mincover, in.total);

  const auto keys = record_keys(corpus, params.tie_break_seed);
  in.record.resize(in.m);
  in.key.resize(in.m);
  in.category.resize(in.m);
  std::map<std::size_t, int> compact;
  for (std::size_t i = 0; i < in.m; ++i) {
    const std::size_t rec = graph.node_order[first + i];
    in.record[i] = rec;
    in.key[i] = keys[rec];
    const std::size_t cat = category_of(corpus, rec);
    auto [it, inserted] = compact.emplace(cat, static_cast<int>(compact.size()));
    if (inserted) in.category_corpus_index.push_back(cat);
    in.category[i] = it->second;
  }
  if (in.required > 1 && compact.size() > 64) {
    throw Error(ErrorCode::kValidation,
                "coverage tracking supports at most 64 categories per interval",
                {{"categories", compact.size()}});
  }

  in.out.resize(in.m);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    const std::size_t ru = graph.rank[edge.source];
    const std::size_t rv = graph.rank[edge.target];
    if (ru < first || rv > last) continue;
    in.out[ru - first].push_back({rv - first, edge.coherence, e});
    ++in.arc_count;
  }
  return in;
}

// reach[r][v]: v reaches the target through exactly r images (v and target
// included) using arcs with coherence >= threshold.
std::vector<std::vector<char>> backward_reach(const Instance& in,
                                              double threshold) {
  std::vector<std::vector<char>> reach(in.k + 1, std::vector<char>(in.m, 0));
  reach[1][in.target()] = 1;
  for (std::size_t r = 2; r <= in.k; ++r) {
    for (std::size_t v = 0; v < in.m; ++v) {
      for (const auto& a : in.out[v]) {
        if (a.coherence >= threshold && reach[r - 1][a.to]) {
          reach[r][v] = 1;
          break;
        }
      }
    }
  }
  return reach;
}

// fwd[l][v]: some source->v prefix has exactly l images.
std::vector<std::vector<char>> forward_reach(const Instance& in,
                                             double threshold) {
  std::vector<std::vector<char>> reach(in.k + 1, std::vector<char>(in.m, 0));
  reach[1][in.source()] = 1;
  for (std::size_t l = 1; l < in.k; ++l) {
    for (std::size_t v = 0; v < in.m; ++v) {
      if (!reach[l][v]) continue;
      for (const auto& a : in.out[v]) {
        if (a.coherence >= threshold) reach[l + 1][a.to] = 1;
      }
    }
  }
  return reach;
}

struct Label {
  std::uint64_t mask = 0;
  double score = 0.0;
  std::vector<std::uint32_t> path;  // local nodes
};

bool lex_less_equal(const Instance& in, const Label& a, const Label& b) {
  for (std::size_t i = 0; i < a.path.size(); ++i) {
    const auto ka = in.key[a.path[i]];
    const auto kb = in.key[b.path[i]];
    if (ka != kb) return ka < kb;
  }
  return true;
}

bool dominates(const Instance& in, const Label& a, const Label& b,
               bool optimize) {
  if ((a.mask & b.mask) != b.mask) return false;
  if (!optimize) return true;
  if (a.score != b.score) return a.score > b.score;
  return lex_less_equal(in, a, b);
}

struct DpOutcome {
  bool found = false;
  Label best;
};

// Exact search over routes of exactly k images. With optimize=false it
// returns any witness; otherwise the route maximizing total coherence, ties
// broken by lexicographic key order.
DpOutcome run_dp(const Instance& in, double threshold, bool optimize,
                 const Deadline& deadline, std::size_t& steps) {
  ++steps;
  DpOutcome outcome;
  if (in.k > in.m) return outcome;
  const auto reach = backward_reach(in, threshold);
  if (!reach[in.k][in.source()]) return outcome;

  const std::size_t required = in.required;
  auto cap = [required](std::uint64_t mask) {
    return static_cast<std::size_t>(std::popcount(mask)) >= required ? kFullMask
                                                                     : mask;
  };

  std::vector<std::vector<Label>> layer(in.m);
  std::vector<std::vector<Label>> next(in.m);
  Label start;
  start.mask = cap(std::uint64_t{1} << in.category[in.source()]);
  start.path = {static_cast<std::uint32_t>(in.source())};
  layer[in.source()].push_back(std::move(start));

  std::size_t work = 0;
  for (std::size_t l = 1; l < in.k; ++l) {
    const std::size_t remaining_after = in.k - l - 1;  // images after the head
    for (auto& labels : next) labels.clear();
    for (std::size_t v = 0; v < in.m; ++v) {
      for (const auto& label : layer[v]) {
        for (const auto& a : in.out[v]) {
          if (a.coherence < threshold || !reach[in.k - l][a.to]) continue;
          if ((++work & 0xFFF) == 0 && deadline.passed()) throw TimedOut{};
          Label cand;
          cand.mask = label.mask == kFullMask
                          ? kFullMask
                          : cap(label.mask | (std::uint64_t{1} << in.category[a.to]));
          if (cand.mask != kFullMask &&
              static_cast<std::size_t>(std::popcount(cand.mask)) +
                      remaining_after < required) {
            continue;
          }
          cand.score = optimize ? label.score + a.coherence : 0.0;
          cand.path = label.path;
          cand.path.push_back(static_cast<std::uint32_t>(a.to));
          auto& bucket = next[a.to];
          bool dominated = false;
          for (const auto& other : bucket) {
            if (dominates(in, other, cand, optimize)) {
              dominated = true;
              break;
            }
          }
          if (dominated) continue;
          std::erase_if(bucket, [&](const Label& other) {
            return dominates(in, cand, other, optimize);
          });
          bucket.push_back(std::move(cand));
        }
      }
    }
    std::swap(layer, next);
  }

  for (const auto& label : layer[in.target()]) {
    if (label.mask != kFullMask) continue;
    if (!outcome.found || dominates(in, label, outcome.best, optimize)) {
      outcome.best = label;
      outcome.found = true;
      if (!optimize) break;
    }
  }
  return outcome;
}

std::size_t longest_path_images(const Instance& in) {
  std::vector<std::size_t> best(in.m, 0);
  best[in.source()] = 1;
  for (std::size_t v = 0; v < in.m; ++v) {
    if (best[v] == 0) continue;
    for (const auto& a : in.out[v]) best[a.to] = std::max(best[a.to], best[v] + 1);
  }
  return best[in.target()];
}

FeasibilityReport feasibility(const Instance& in, const Deadline& deadline,
                              std::size_t& steps) {
  const Corpus& corpus = *in.corpus;
  FeasibilityReport report;
  report.interval_nodes = in.m;
  if (in.m < 2) return report;
  report.required_clusters = in.required;
  report.total_clusters = in.total;
  report.max_path_length = longest_path_images(in);
  const double all_edges = -1.0;
  if (in.k <= in.m) {
    report.length_feasible = forward_reach(in, all_edges)[in.k][in.target()] != 0;
  }

  // Nodes lying on any source->target path, regardless of length.
  std::vector<char> from_source(in.m, 0);
  std::vector<char> to_target(in.m, 0);
  from_source[in.source()] = 1;
  for (std::size_t v = 0; v < in.m; ++v) {
    if (!from_source[v]) continue;
    for (const auto& a : in.out[v]) from_source[a.to] = 1;
  }
  to_target[in.target()] = 1;
  for (std::size_t v = in.m; v-- > 0;) {
    for (const auto& a : in.out[v]) {
      if (to_target[a.to]) to_target[v] = 1;
    }
  }
  std::set<std::size_t> cats;
  for (std::size_t v = 0; v < in.m; ++v) {
    if (from_source[v] && to_target[v]) cats.insert(category_of(corpus, in.record[v]));
  }
  for (std::size_t c : cats) report.attainable_categories.push_back(corpus.categories[c]);
  report.coverage_feasible = cats.size() >= in.required;

  if (report.length_feasible && report.coverage_feasible) {
    report.jointly_feasible = run_dp(in, all_edges, false, deadline, steps).found;
  }
  report.feasible = report.jointly_feasible;
  if (!report.length_feasible) {
    report.failed_constraint = "length";
  } else if (!report.jointly_feasible) {
    report.failed_constraint = "coverage";
  }
  return report;
}

[[noreturn]] void throw_infeasible(const FeasibilityReport& report) {
  const std::string what =
      report.failed_constraint == "length"
          ? "no route with exactly the requested number of images exists"
          : "no route of the requested length meets the coverage requirement";
  json detail = feasibility_to_json(report);
  detail["constraint"] = report.failed_constraint;
  throw Error(ErrorCode::kInfeasible, what, detail);
}

NarrativeMap build_map(const Instance& in, const ExtractionParams& params,
                       const std::vector<std::uint32_t>& path) {
  const Corpus& corpus = *in.corpus;
  const CoherenceGraph& graph = *in.graph;
  NarrativeMap map;
  map.params = params;
  map.required_clusters = in.required;
  map.total_clusters = in.total;
  map.mu_star = path.size() > 1 ? 1.0 : 0.0;
  std::set<std::size_t> cats;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const std::size_t rec = in.record[path[i]];
    map.main_route.push_back(corpus.records[rec].id);
    cats.insert(category_of(corpus, rec));
    if (i + 1 == path.size()) break;
    const auto& arcs = in.out[path[i]];
    auto it = std::find_if(arcs.begin(), arcs.end(),
                           [&](const Arc& a) { return a.to == path[i + 1]; });
    if (it == arcs.end()) {
      throw Error(ErrorCode::kInternal, "decoded route uses a missing edge");
    }
    const CoherenceEdge& e = graph.edges[it->edge];
    map.edges.push_back({corpus.records[e.source].id, corpus.records[e.target].id,
                         e.coherence, e.raw_similarity, e.topic_similarity});
    map.mu_star = std::min(map.mu_star, e.coherence);
    map.total_coherence += e.coherence;
  }
  map.nodes = map.main_route;
  for (std::size_t c : cats) map.covered_clusters.push_back(corpus.categories[c]);
  map.stats.node_count = in.m;
  map.stats.edge_count = in.arc_count;
  map.stats.backend = to_string(params.backend);
  return map;
}

[[noreturn]] void throw_timeout(const Instance& in, const ExtractionParams& params,
                                const std::optional<std::vector<std::uint32_t>>& incumbent,
                                const Deadline& deadline, std::size_t steps) {
  json detail = {{"timeout_seconds", params.timeout_seconds}};
  if (incumbent) {
    NarrativeMap map = build_map(in, params, *incumbent);
    map.stats.optimal = false;
    map.stats.search_steps = steps;
    map.stats.wall_seconds = deadline.elapsed();
    detail["incumbent"] = map_to_json(map);
  } else {
    detail["incumbent"] = nullptr;
  }
  throw Error(ErrorCode::kTimeout, "extraction exceeded its time limit", detail);
}

NarrativeMap solve_combinatorial(const Instance& in,
                                 const ExtractionParams& params,
                                 const Deadline& deadline) {
  std::size_t steps = 0;
  std::optional<std::vector<std::uint32_t>> incumbent;
  try {
    std::vector<double> levels;
    for (const auto& arcs : in.out) {
      for (const auto& a : arcs) levels.push_back(a.coherence);
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    DpOutcome witness;
    if (!levels.empty()) witness = run_dp(in, levels.front(), false, deadline, steps);
    if (!witness.found) throw_infeasible(feasibility(in, deadline, steps));
    incumbent = witness.best.path;

    // Feasibility is monotone in the threshold: find the largest feasible one.
    std::size_t lo = 0;
    std::size_t hi = levels.size() - 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo + 1) / 2;
      DpOutcome probe = run_dp(in, levels[mid], false, deadline, steps);
      if (probe.found) {
        lo = mid;
        incumbent = probe.best.path;
      } else {
        hi = mid - 1;
      }
    }
    DpOutcome best = run_dp(in, levels[lo], true, deadline, steps);
    if (!best.found) {
      throw Error(ErrorCode::kInternal, "optimal threshold lost its witness");
    }
    NarrativeMap map = build_map(in, params, best.best.path);
    map.stats.optimal = true;
    map.stats.search_steps = steps;
    return map;
  } catch (const TimedOut&) {
    throw_timeout(in, params, incumbent, deadline, steps);
  }
}

NarrativeMap solve_with_milp(const Instance& in, const ExtractionParams& params,
                             const Deadline& deadline) {
  std::size_t steps = 0;
  const double all_edges = -1.0;
  if (in.k > in.m) throw_infeasible(feasibility(in, deadline, steps));
  const auto fwd = forward_reach(in, all_edges);
  const auto bwd = backward_reach(in, all_edges);

  // Presolve: keep nodes and arcs that sit on some exactly-k route.
  std::vector<char> node_ok(in.m, 0);
  for (std::size_t v = 0; v < in.m; ++v) {
    for (std::size_t l = 1; l <= in.k; ++l) {
      if (fwd[l][v] && bwd[in.k - l + 1][v]) node_ok[v] = 1;
    }
  }
  if (!node_ok[in.source()]) throw_infeasible(feasibility(in, deadline, steps));

  milp::Problem problem;
  struct EdgeVar {
    std::size_t from;
    Arc arc;
    std::size_t var;
  };
  std::vector<EdgeVar> edge_vars;
  for (std::size_t u = 0; u < in.m; ++u) {
    for (const auto& a : in.out[u]) {
      bool ok = false;
      for (std::size_t l = 1; l < in.k && !ok; ++l) {
        ok = fwd[l][u] && bwd[in.k - l][a.to];
      }
      if (ok) edge_vars.push_back({u, a, 0});
    }
  }
  const double epsilon = 1e-4 / static_cast<double>(std::max<std::size_t>(1, edge_vars.size()));
  const std::size_t mu = problem.add_variable({0.0, 1.0, false, "mu"}, 1.0);
  for (auto& ev : edge_vars) {
    ev.var = problem.add_binary("x", epsilon * ev.arc.coherence);
  }
  std::vector<std::size_t> y(in.m, SIZE_MAX);
  for (std::size_t v = 0; v < in.m; ++v) {
    if (!node_ok[v]) continue;
    const bool endpoint = v == in.source() || v == in.target();
    y[v] = problem.add_variable({endpoint ? 1.0 : 0.0, 1.0, true, "y"});
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> in_terms(in.m);
  std::vector<std::vector<std::pair<std::size_t, double>>> out_terms(in.m);
  for (const auto& ev : edge_vars) {
    out_terms[ev.from].emplace_back(ev.var, 1.0);
    in_terms[ev.arc.to].emplace_back(ev.var, 1.0);
    // Weakest link: mu <= coh + (1 - x).
    problem.add_constraint({{mu, 1.0}, {ev.var, 1.0}}, milp::Sense::kLessEqual,
                           ev.arc.coherence + 1.0);
  }
  for (std::size_t v = 0; v < in.m; ++v) {
    if (!node_ok[v]) continue;
    if (v == in.source()) {
      problem.add_constraint(out_terms[v], milp::Sense::kEqual, 1.0);
      if (!in_terms[v].empty()) problem.add_constraint(in_terms[v], milp::Sense::kEqual, 0.0);
    } else if (v == in.target()) {
      problem.add_constraint(in_terms[v], milp::Sense::kEqual, 1.0);
      if (!out_terms[v].empty()) problem.add_constraint(out_terms[v], milp::Sense::kEqual, 0.0);
    } else {
      auto inflow = in_terms[v];
      inflow.emplace_back(y[v], -1.0);
      problem.add_constraint(std::move(inflow), milp::Sense::kEqual, 0.0);
      auto outflow = out_terms[v];
      outflow.emplace_back(y[v], -1.0);
      problem.add_constraint(std::move(outflow), milp::Sense::kEqual, 0.0);
    }
  }
  std::vector<std::pair<std::size_t, double>> count;
  for (std::size_t v = 0; v < in.m; ++v) {
    if (node_ok[v]) count.emplace_back(y[v], 1.0);
  }
  problem.add_constraint(std::move(count), milp::Sense::kEqual,
                         static_cast<double>(in.k));
  if (in.required > 0) {
    std::map<int, std::vector<std::pair<std::size_t, double>>> members;
    for (std::size_t v = 0; v < in.m; ++v) {
      if (node_ok[v]) members[in.category[v]].emplace_back(y[v], -1.0);
    }
    std::vector<std::pair<std::size_t, double>> covered;
    for (auto& [cat, terms] : members) {
      const std::size_t z = problem.add_binary("z");
      terms.emplace_back(z, 1.0);
      problem.add_constraint(std::move(terms), milp::Sense::kLessEqual, 0.0);
      covered.emplace_back(z, 1.0);
    }
    problem.add_constraint(std::move(covered), milp::Sense::kGreaterEqual,
                           static_cast<double>(in.required));
  }

  milp::Options options;
  options.time_limit_seconds =
      std::max(0.0, std::chrono::duration<double>(deadline.end - Clock::now()).count());
  const milp::Result result = milp::solve_milp(problem, options);
  steps = result.nodes;

  auto decode = [&](const std::vector<double>& values) {
    std::vector<std::uint32_t> path = {static_cast<std::uint32_t>(in.source())};
    std::size_t at = in.source();
    while (at != in.target() && path.size() <= in.k) {
      std::size_t next = SIZE_MAX;
      for (const auto& ev : edge_vars) {
        if (ev.from == at && values[ev.var] > 0.5) next = ev.arc.to;
      }
      if (next == SIZE_MAX) break;
      path.push_back(static_cast<std::uint32_t>(next));
      at = next;
    }
    if (at != in.target() || path.size() != in.k) {
      throw Error(ErrorCode::kInternal, "MILP solution does not decode to a route");
    }
    return path;
  };

  switch (result.status) {
    case milp::Status::kOptimal: {
      NarrativeMap map = build_map(in, params, decode(result.values));
      map.stats.optimal = true;
      map.stats.search_steps = steps;
      return map;
    }
    case milp::Status::kTimeout: {
      std::optional<std::vector<std::uint32_t>> incumbent;
      if (result.has_incumbent) incumbent = decode(result.values);
      throw_timeout(in, params, incumbent, deadline, steps);
    }
    case milp::Status::kInfeasible:
      throw_infeasible(feasibility(in, deadline, steps));
    case milp::Status::kUnbounded:
      break;
  }
  throw Error(ErrorCode::kInternal, "MILP relaxation reported unbounded");
}

CoherenceGraph weighted_graph(const CoherenceGraph& graph, const Corpus& corpus,
                              const ExtractionParams& params) {
  if (params.itf && !graph.itf_applied) {
    return coherence::apply_itf_weighting(graph, corpus);
  }
  return graph;
}

}  // namespace

std::string to_string(SolverBackend backend) {
  return backend == SolverBackend::kCombinatorial ? "combinatorial" : "milp";
}

SolverBackend solver_backend_from_string(const std::string& name) {
  if (name == "combinatorial") return SolverBackend::kCombinatorial;
  if (name == "milp") return SolverBackend::kMilp;
  throw Error(ErrorCode::kValidation, "unknown solver '" + name + "'",
              {{"field", "solver"}, {"value", name}});
}

std::size_t required_clusters(double mincover, std::size_t total) {
  const double need = mincover * static_cast<double>(total);
  return static_cast<std::size_t>(std::max(0.0, std::ceil(need - 1e-9)));
}

std::size_t total_clusters(const Corpus& corpus) {
  std::set<std::size_t> cats;
  for (std::size_t i = 0; i < corpus.size(); ++i) cats.insert(category_of(corpus, i));
  return cats.size();
}

void validate_params(const CoherenceGraph& graph, const Corpus& corpus,
                     const ExtractionParams& params) {
  auto fail = [](const std::string& msg, json detail) {
    throw Error(ErrorCode::kValidation, msg, std::move(detail));
  };
  if (graph.space_name != params.space_name) {
    fail("graph was built over space '" + graph.space_name + "'",
         {{"field", "space_name"}, {"value", params.space_name}});
  }
  if (graph.itf_applied && !params.itf) {
    fail("graph is ITF-weighted but itf was not requested", {{"field", "itf"}});
  }
  for (const auto* id : {&params.source_id, &params.target_id}) {
    if (!corpus.find(*id)) {
      fail("unknown record id '" + *id + "'", {{"id", *id}, {"reason", "unknown_id"}});
    }
  }
  if (params.k < 2) fail("k must be at least 2", {{"field", "k"}, {"value", params.k}});
  if (!(params.mincover >= 0.0 && params.mincover <= 1.0)) {
    fail("mincover must lie in [0, 1]", {{"field", "mincover"}, {"value", params.mincover}});
  }
  if (!(params.timeout_seconds > 0.0)) {
    fail("timeout must be positive", {{"field", "timeout"}});
  }
  const std::size_t s = corpus.index_of(params.source_id);
  const std::size_t t = corpus.index_of(params.target_id);
  if (graph.rank.size() != corpus.size() || graph.rank[s] >= graph.rank[t]) {
    fail("source must come strictly before target in temporal order",
         {{"source", params.source_id}, {"target", params.target_id},
          {"reason", "source_not_before_target"}});
  }
}

FeasibilityReport check_feasibility(const CoherenceGraph& graph,
                                    const Corpus& corpus,
                                    const ExtractionParams& params) {
  validate_params(graph, corpus, params);
  const CoherenceGraph g = weighted_graph(graph, corpus, params);
  const Instance in = make_instance(g, corpus, params);
  const Deadline deadline(params.timeout_seconds);
  std::size_t steps = 0;
  try {
    return feasibility(in, deadline, steps);
  } catch (const TimedOut&) {
    throw Error(ErrorCode::kTimeout, "feasibility check exceeded its time limit");
  }
}

NarrativeMap extract_map(const CoherenceGraph& graph, const Corpus& corpus,
                         const ExtractionParams& params) {
  validate_params(graph, corpus, params);
  const Deadline deadline(params.timeout_seconds);
  const CoherenceGraph g = weighted_graph(graph, corpus, params);
  const Instance in = make_instance(g, corpus, params);
  NarrativeMap map = params.backend == SolverBackend::kCombinatorial
                         ? solve_combinatorial(in, params, deadline)
                         : solve_with_milp(in, params, deadline);
  map.stats.wall_seconds = deadline.elapsed();
  verify_map(map, g, corpus);
  return map;
}

std::vector<std::string> extract_main_route(const NarrativeMap& map) {
  if (map.main_route.empty() && map.params.source_id.empty()) {
    throw Error(ErrorCode::kValidation, "map has no endpoints");
  }
  const std::string& source = map.params.source_id;
  const std::string& target = map.params.target_id;

  std::map<std::string, std::vector<const MapEdge*>> out;
  std::map<std::string, std::size_t> indegree;
  std::set<std::string> nodes(map.nodes.begin(), map.nodes.end());
  nodes.insert(source);
  nodes.insert(target);
  for (const auto& e : map.edges) {
    nodes.insert(e.source);
    nodes.insert(e.target);
    out[e.source].push_back(&e);
    ++indegree[e.target];
  }
  // Kahn's algorithm; std::set keeps the order deterministic.
  std::vector<std::string> order;
  std::set<std::string> ready;
  for (const auto& v : nodes) {
    if (indegree[v] == 0) ready.insert(v);
  }
  while (!ready.empty()) {
    const std::string v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(v);
    for (const MapEdge* e : out[v]) {
      if (--indegree[e->target] == 0) ready.insert(e->target);
    }
  }
  if (order.size() != nodes.size()) {
    throw Error(ErrorCode::kValidation, "map edges contain a cycle");
  }

  struct Best {
    bool reached = false;
    double log_product = 0.0;
    std::vector<std::string> path;
  };
  std::map<std::string, Best> best;
  best[source] = {true, 0.0, {source}};
  auto better = [](const Best& a, const Best& b) {
    if (!b.reached) return true;
    if (a.log_product != b.log_product) return a.log_product > b.log_product;
    return a.path < b.path;
  };
  for (const auto& v : order) {
    const Best& here = best[v];
    if (!here.reached) continue;
    for (const MapEdge* e : out[v]) {
      Best cand;
      cand.reached = true;
      cand.log_product = here.log_product +
                         (e->coherence > 0.0 ? std::log(e->coherence)
                                             : -std::numeric_limits<double>::infinity());
      cand.path = here.path;
      cand.path.push_back(e->target);
      Best& slot = best[e->target];
      if (better(cand, slot)) slot = std::move(cand);
    }
  }
  if (!best[target].reached) {
    throw Error(ErrorCode::kInfeasible, "map has no source->target path",
                {{"source", source}, {"target", target}});
  }
  return best[target].path;
}

void verify_map(const NarrativeMap& map, const CoherenceGraph& graph,
                const Corpus& corpus) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInternal, "map invariant violated: " + msg);
  };
  const auto& route = map.main_route;
  if (route.size() != map.params.k) fail("route length differs from k");
  if (route.front() != map.params.source_id) fail("route does not start at source");
  if (route.back() != map.params.target_id) fail("route does not end at target");
  std::map<std::pair<std::size_t, std::size_t>, double> edges;
  for (const auto& e : graph.edges) edges[{e.source, e.target}] = e.coherence;
  double weakest = 1.0;
  std::set<std::string> cats;
  for (std::size_t i = 0; i < route.size(); ++i) {
    const std::size_t u = corpus.index_of(route[i]);
    cats.insert(*corpus.records[u].effective_category());
    if (i + 1 == route.size()) break;
    const std::size_t v = corpus.index_of(route[i + 1]);
    if (graph.rank[u] >= graph.rank[v]) fail("route is not increasing in time");
    auto it = edges.find({u, v});
    if (it == edges.end()) fail("route uses an edge missing from the graph");
    weakest = std::min(weakest, it->second);
  }
  if (weakest != map.mu_star) fail("mu_star differs from the weakest route edge");
  if (cats.size() < map.required_clusters) fail("coverage requirement not met");
  if (map.required_clusters != required_clusters(map.params.mincover, total_clusters(corpus))) {
    fail("required cluster count is stale");
  }
}

json params_to_json(const ExtractionParams& p) {
  return {{"source_id", p.source_id},
          {"target_id", p.target_id},
          {"k", p.k},
          {"mincover", p.mincover},
          {"space_name", p.space_name},
          {"itf", p.itf},
          {"tie_break_seed", p.tie_break_seed ? json(*p.tie_break_seed) : json(nullptr)},
          {"timeout_seconds", p.timeout_seconds},
          {"solver", to_string(p.backend)}};
}

ExtractionParams params_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::kValidation, "extraction request must be an object");
  }
  ExtractionParams p;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "source_id") {
        p.source_id = value.get<std::string>();
      } else if (key == "target_id") {
        p.target_id = value.get<std::string>();
      } else if (key == "k" || key == "K") {
        if (!value.is_number_integer() || value.get<long long>() < 0) {
          throw Error(ErrorCode::kValidation, "k must be a non-negative integer",
                      {{"field", "k"}});
        }
        p.k = value.get<std::size_t>();
      } else if (key == "mincover") {
        p.mincover = value.get<double>();
      } else if (key == "space_name" || key == "space") {
        p.space_name = value.get<std::string>();
      } else if (key == "itf") {
        p.itf = value.get<bool>();
      } else if (key == "tie_break_seed") {
        if (!value.is_null()) p.tie_break_seed = value.get<std::uint64_t>();
      } else if (key == "timeout_seconds") {
        p.timeout_seconds = value.get<double>();
      } else if (key == "solver") {
        p.backend = solver_backend_from_string(value.get<std::string>());
      } else {
        throw Error(ErrorCode::kValidation, "unknown request field '" + key + "'",
                    {{"field", key}});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation,
                std::string("malformed extraction request: ") + e.what());
  }
  if (p.source_id.empty() || p.target_id.empty()) {
    throw Error(ErrorCode::kValidation, "source_id and target_id are required",
                {{"field", p.source_id.empty() ? "source_id" : "target_id"}});
  }
  return p;
}

json map_to_json(const NarrativeMap& map, bool include_timing) {
  json edges = json::array();
  for (const auto& e : map.edges) {
    edges.push_back({{"source", e.source},
                     {"target", e.target},
                     {"coherence", e.coherence},
                     {"raw_similarity", e.raw_similarity},
                     {"topic_similarity", e.topic_similarity}});
  }
  json stats = {{"node_count", map.stats.node_count},
                {"edge_count", map.stats.edge_count},
                {"optimal", map.stats.optimal},
                {"backend", map.stats.backend},
                {"search_steps", map.stats.search_steps}};
  if (include_timing) stats["wall_seconds"] = map.stats.wall_seconds;
  return {{"params", params_to_json(map.params)},
          {"nodes", map.nodes},
          {"edges", edges},
          {"main_route", map.main_route},
          {"mu_star", map.mu_star},
          {"total_coherence", map.total_coherence},
          {"covered_clusters", map.covered_clusters},
          {"required_clusters", map.required_clusters},
          {"total_clusters", map.total_clusters},
          {"stats", stats}};
}

NarrativeMap map_from_json(const json& doc) {
  NarrativeMap map;
  try {
    map.params = params_from_json(doc.at("params"));
    map.nodes = doc.at("nodes").get<std::vector<std::string>>();
    for (const auto& e : doc.at("edges")) {
      map.edges.push_back({e.at("source").get<std::string>(),
                           e.at("target").get<std::string>(),
                           e.at("coherence").get<double>(),
                           e.value("raw_similarity", 0.0),
                           e.value("topic_similarity", 0.0)});
    }
    map.main_route = doc.at("main_route").get<std::vector<std::string>>();
    map.mu_star = doc.at("mu_star").get<double>();
    map.total_coherence = doc.value("total_coherence", 0.0);
    map.covered_clusters = doc.value("covered_clusters", std::vector<std::string>{});
    map.required_clusters = doc.value("required_clusters", std::size_t{0});
    map.total_clusters = doc.value("total_clusters", std::size_t{0});
    if (doc.contains("stats")) {
      const auto& s = doc["stats"];
      map.stats.node_count = s.value("node_count", std::size_t{0});
      map.stats.edge_count = s.value("edge_count", std::size_t{0});
      map.stats.optimal = s.value("optimal", false);
      map.stats.backend = s.value("backend", std::string{});
      map.stats.search_steps = s.value("search_steps", std::size_t{0});
      map.stats.wall_seconds = s.value("wall_seconds", 0.0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed map document: ") + e.what());
  }
  return map;
}

json feasibility_to_json(const FeasibilityReport& r) {
  return {{"feasible", r.feasible},
          {"failed_constraint", r.failed_constraint.empty() ? json(nullptr)
                                                            : json(r.failed_constraint)},
          {"interval_nodes", r.interval_nodes},
          {"max_path_length", r.max_path_length},
          {"length_feasible", r.length_feasible},
          {"attainable_categories", r.attainable_categories},
          {"required_clusters", r.required_clusters},
          {"total_clusters", r.total_clusters},
          {"coverage_feasible", r.coverage_feasible},
          {"jointly_feasible", r.jointly_feasible}};
}

}  // namespace narrative::extract
