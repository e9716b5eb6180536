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

// Dense bounded-variable primal simplex. Variables are shifted to [0, u];
// rows become equalities with slack, surplus and artificial columns, phase 1
// drives the artificials to zero and phase 2 optimizes the real objective
// with the artificials pinned to [0, 0].

#include <algorithm>
#include <cmath>
#include <vector>

#include "narrative/error.hpp"
#include "narrative/milp.hpp"

namespace narrative::milp {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> a_;
};

struct Simplex {
  Tableau t;
  std::vector<double> upper;   // per column; lower is 0
  std::vector<double> beta;    // basic values per row
  std::vector<std::size_t> basis;
  std::vector<bool> at_upper;  // nonbasic columns only
  std::vector<bool> is_basic;
  std::size_t iterations = 0;

  Simplex(std::size_t rows, std::size_t cols)
      : t(rows, cols), upper(cols, kInfinity), beta(rows, 0.0),
        basis(rows, 0), at_upper(cols, false), is_basic(cols, false) {}

  void pivot(std::size_t r, std::size_t q, std::vector<double>& cost) {
    const double p = t.at(r, q);
    for (std::size_t j = 0; j < t.cols(); ++j) t.at(r, j) /= p;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      if (i == r) continue;
      const double f = t.at(i, q);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < t.cols(); ++j) t.at(i, j) -= f * t.at(r, j);
    }
    const double f = cost[q];
    if (f != 0.0) {
      for (std::size_t j = 0; j < t.cols(); ++j) cost[j] -= f * t.at(r, j);
    }
  }

  // Maximizes with reduced costs `cost` (already expressed in the current
  // basis). Returns false when unbounded.
  bool run(std::vector<double>& cost, std::size_t iteration_cap) {
    std::size_t stall = 0;
    while (iterations < iteration_cap) {
      const bool bland = stall > 50;
      std::size_t q = t.cols();
      double best = 0.0;
      for (std::size_t j = 0; j < t.cols(); ++j) {
        if (is_basic[j] || upper[j] == 0.0) continue;
        const double d = cost[j];
        const bool improving =
            (!at_upper[j] && d > kCostTol) || (at_upper[j] && d < -kCostTol);
        if (!improving) continue;
        if (bland) {
          q = j;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          q = j;
        }
      }
      if (q == t.cols()) return true;
      ++iterations;

      const double dir = at_upper[q] ? -1.0 : 1.0;
      double step = upper[q];
      std::size_t leave = t.rows();
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < t.rows(); ++i) {
        const double a = t.at(i, q) * dir;
        double limit;
        bool to_upper;
        if (a > kPivotTol) {
          limit = beta[i] / a;
          to_upper = false;
        } else if (a < -kPivotTol && upper[basis[i]] < kInfinity) {
          limit = (upper[basis[i]] - beta[i]) / -a;
          to_upper = true;
        } else {
          continue;
        }
        limit = std::max(limit, 0.0);
        if (limit < step - 1e-12 ||
            (leave < t.rows() && std::abs(limit - step) <= 1e-12 &&
             basis[i] < basis[leave])) {
          step = limit;
          leave = i;
          leave_to_upper = to_upper;
        }
      }
      if (step == kInfinity) return false;
      stall = step <= 1e-12 ? stall + 1 : 0;

      for (std::size_t i = 0; i < t.rows(); ++i) {
        beta[i] -= dir * step * t.at(i, q);
      }
      if (leave == t.rows()) {
        at_upper[q] = !at_upper[q];  // bound flip
        continue;
      }
      const double entering = at_upper[q] ? upper[q] - step : step;
      const std::size_t out = basis[leave];
      pivot(leave, q, cost);
      beta[leave] = entering;
      basis[leave] = q;
      is_basic[q] = true;
      is_basic[out] = false;
      at_upper[out] = leave_to_upper;
      at_upper[q] = false;
    }
    throw Error(ErrorCode::kInternal, "simplex iteration cap reached");
  }
};

}  // namespace

std::size_t Problem::add_variable(Variable v, double cost) {
  variables.push_back(std::move(v));
  objective.push_back(cost);
  return variables.size() - 1;
}

std::size_t Problem::add_binary(std::string name, double cost) {
  return add_variable({0.0, 1.0, true, std::move(name)}, cost);
}

void Problem::add_constraint(std::vector<std::pair<std::size_t, double>> terms,
                             Sense sense, double rhs) {
  constraints.push_back({std::move(terms), sense, rhs});
}

std::string to_string(Status status) {
  switch (status) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kTimeout:
      return "timeout";
  }
  return "unknown";
}

LpResult solve_lp(const Problem& problem) {
  std::vector<double> lo;
  std::vector<double> hi;
  for (const auto& v : problem.variables) {
    lo.push_back(v.lower);
    hi.push_back(v.upper);
  }
  return solve_lp(problem, lo, hi);
}

LpResult solve_lp(const Problem& problem, std::span<const double> lower,
                  std::span<const double> upper) {
  const std::size_t n = problem.variables.size();
  const std::size_t m = problem.constraints.size();
  LpResult result;
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lower[j]) || upper[j] < lower[j] - kFeasTol) {
      result.status = Status::kInfeasible;
      return result;
    }
  }

  // Row data after shifting x = lower + x'.
  std::vector<double> rhs(m);
  std::vector<double> sign(m, 1.0);
  std::vector<Sense> sense(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = problem.constraints[i];
    double b = c.rhs;
    for (const auto& [j, a] : c.terms) b -= a * lower[j];
    sense[i] = c.sense;
    if (b < 0.0) {
      sign[i] = -1.0;
      b = -b;
      if (sense[i] == Sense::kLessEqual) {
        sense[i] = Sense::kGreaterEqual;
      } else if (sense[i] == Sense::kGreaterEqual) {
        sense[i] = Sense::kLessEqual;
      }
    }
    rhs[i] = b;
  }

  // Columns: structural, one slack/surplus per inequality, one artificial per
  // row lacking a unit slack.
  std::size_t cols = n;
  std::vector<std::size_t> slack_col(m, SIZE_MAX);
  std::vector<std::size_t> art_col(m, SIZE_MAX);
  for (std::size_t i = 0; i < m; ++i) {
    if (sense[i] != Sense::kEqual) slack_col[i] = cols++;
  }
  const std::size_t first_art = cols;
  for (std::size_t i = 0; i < m; ++i) {
    if (sense[i] != Sense::kLessEqual) art_col[i] = cols++;
  }

  Simplex s(m, cols);
  for (std::size_t j = 0; j < n; ++j) s.upper[j] = upper[j] - lower[j];
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [j, a] : problem.constraints[i].terms) {
      s.t.at(i, j) += sign[i] * a;
    }
    if (slack_col[i] != SIZE_MAX) {
      s.t.at(i, slack_col[i]) = sense[i] == Sense::kLessEqual ? 1.0 : -1.0;
    }
    if (art_col[i] != SIZE_MAX) s.t.at(i, art_col[i]) = 1.0;
    const std::size_t b = art_col[i] != SIZE_MAX ? art_col[i] : slack_col[i];
    s.basis[i] = b;
    s.is_basic[b] = true;
    s.beta[i] = rhs[i];
  }
  const std::size_t cap = 50 * (m + cols) + 1000;

  if (first_art < cols) {
    // Phase 1: maximize -sum(artificials); reduced costs in the slack basis.
    std::vector<double> cost(cols, 0.0);
    for (std::size_t j = first_art; j < cols; ++j) cost[j] = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (art_col[i] == SIZE_MAX) continue;
      for (std::size_t j = 0; j < cols; ++j) cost[j] += s.t.at(i, j);
    }
    s.run(cost, cap);
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (s.basis[i] >= first_art) infeasibility += s.beta[i];
    }
    if (infeasibility > kFeasTol * std::max(1.0, static_cast<double>(m))) {
      result.status = Status::kInfeasible;
      result.iterations = s.iterations;
      return result;
    }
    for (std::size_t j = first_art; j < cols; ++j) s.upper[j] = 0.0;
  }

  // Phase 2 reduced costs: c_j - c_B B^-1 A_j.
  std::vector<double> cost(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = problem.objective[j];
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t b = s.basis[i];
    const double cb = b < n ? problem.objective[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) cost[j] -= cb * s.t.at(i, j);
  }
  if (!s.run(cost, cap)) {
    result.status = Status::kUnbounded;
    result.iterations = s.iterations;
    return result;
  }

  result.status = Status::kOptimal;
  result.iterations = s.iterations;
  result.values.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!s.is_basic[j]) {
      result.values[j] = lower[j] + (s.at_upper[j] ? s.upper[j] : 0.0);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (s.basis[i] < n) result.values[s.basis[i]] = lower[s.basis[i]] + s.beta[i];
  }
  result.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    result.objective += problem.objective[j] * result.values[j];
  }
  return result;
}

}  // namespace narrative::milp
