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

#ifndef NARRATIVE_MILP_HPP_
#define NARRATIVE_MILP_HPP_

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace narrative::milp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

struct Variable {
  double lower = 0.0;  // must be finite
  double upper = kInfinity;
  bool integer = false;
  std::string name;
};

struct Constraint {
  std::vector<std::pair<std::size_t, double>> terms;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

// maximize objective . x subject to constraints and variable bounds.
struct Problem {
  std::vector<Variable> variables;
  std::vector<Constraint> constraints;
  std::vector<double> objective;

  std::size_t add_variable(Variable v, double cost = 0.0);
  std::size_t add_binary(std::string name, double cost = 0.0);
  void add_constraint(std::vector<std::pair<std::size_t, double>> terms,
                      Sense sense, double rhs);
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kTimeout };

std::string to_string(Status status);

struct LpResult {
  Status status = Status::kInfeasible;
  std::vector<double> values;
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Continuous relaxation with the given bounds in place of the variables' own.
LpResult solve_lp(const Problem& problem, std::span<const double> lower,
                  std::span<const double> upper);
LpResult solve_lp(const Problem& problem);

struct Options {
  double time_limit_seconds = 60.0;
  double integrality_tolerance = 1e-6;
};

struct Result {
  Status status = Status::kInfeasible;
  bool has_incumbent = false;
  std::vector<double> values;
  double objective = 0.0;
  double best_bound = kInfinity;
  std::size_t nodes = 0;
  std::size_t lp_iterations = 0;
};

// Best-first branch and bound over LP relaxations. kOptimal certifies the
// incumbent; kTimeout returns the best incumbent found, if any.
Result solve_milp(const Problem& problem, const Options& options = {});

}  // namespace narrative::milp

#endif  // NARRATIVE_MILP_HPP_
