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

#include <chrono>
#include <cmath>
#include <queue>
#include <vector>

#include "narrative/milp.hpp"

namespace narrative::milp {
namespace {

struct Node {
  std::vector<double> lower;
  std::vector<double> upper;
  double bound = kInfinity;  // parent's relaxation value
  std::size_t depth = 0;
  std::size_t sequence = 0;
};

struct NodeOrder {
  // Best bound first; deeper nodes, then older nodes, break ties.
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.sequence > b.sequence;
  }
};

}  // namespace

Result solve_milp(const Problem& problem, const Options& options) {
  using Clock = std::chrono::steady_clock;
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(options.time_limit_seconds));
  const double prune_tol = 1e-10;

  Result result;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  Node root;
  for (const auto& v : problem.variables) {
    root.lower.push_back(v.integer ? std::ceil(v.lower - 1e-9) : v.lower);
    root.upper.push_back(v.integer && v.upper < kInfinity
                             ? std::floor(v.upper + 1e-9)
                             : v.upper);
  }
  std::size_t sequence = 0;
  open.push(std::move(root));
  bool saw_unbounded = false;

  while (!open.empty()) {
    if (Clock::now() > deadline) {
      result.status = Status::kTimeout;
      result.best_bound = open.top().bound;
      return result;
    }
    Node node = open.top();
    open.pop();
    if (result.has_incumbent && node.bound <= result.objective + prune_tol) {
      continue;
    }
    ++result.nodes;
    const LpResult lp = solve_lp(problem, node.lower, node.upper);
    result.lp_iterations += lp.iterations;
    if (lp.status == Status::kInfeasible) continue;
    if (lp.status == Status::kUnbounded) {
      saw_unbounded = true;
      continue;
    }
    if (result.has_incumbent && lp.objective <= result.objective + prune_tol) {
      continue;
    }

    std::size_t branch = problem.variables.size();
    double worst = options.integrality_tolerance;
    for (std::size_t j = 0; j < problem.variables.size(); ++j) {
      if (!problem.variables[j].integer) continue;
      const double frac = lp.values[j] - std::floor(lp.values[j]);
      const double dist = std::min(frac, 1.0 - frac);
      if (dist > worst) {
        worst = dist;
        branch = j;
      }
    }
    if (branch == problem.variables.size()) {
      result.has_incumbent = true;
      result.values = lp.values;
      for (std::size_t j = 0; j < problem.variables.size(); ++j) {
        if (problem.variables[j].integer) {
          result.values[j] = std::round(result.values[j]);
        }
      }
      result.objective = 0.0;
      for (std::size_t j = 0; j < result.values.size(); ++j) {
        result.objective += problem.objective[j] * result.values[j];
      }
      continue;
    }

    const double v = lp.values[branch];
    Node down = node;
    down.upper[branch] = std::floor(v);
    down.bound = lp.objective;
    down.depth = node.depth + 1;
    down.sequence = ++sequence;
    Node up = std::move(node);
    up.lower[branch] = std::ceil(v);
    up.bound = lp.objective;
    up.depth = down.depth;
    up.sequence = ++sequence;
    open.push(std::move(up));
    open.push(std::move(down));
  }

  if (result.has_incumbent) {
    result.status = Status::kOptimal;
    result.best_bound = result.objective;
  } else {
    result.status = saw_unbounded ? Status::kUnbounded : Status::kInfeasible;
  }
  return result;
}

}  // namespace narrative::milp
