// Copyright 2026 The kmg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KMG_LP_H_
#define KMG_LP_H_

#include <string>

#include <Eigen/Dense>

namespace kmg {

// maximize objective^T x
// subject to  a_ub x <= b_ub,  a_eq x == b_eq,  lower <= x <= upper.
// Bounds may be +-infinity. Empty constraint blocks are allowed.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  // Problem with n variables, no constraints, bounds [0, inf).
  static LinearProgram NonNegative(int n);

  int num_vars() const { return static_cast<int>(objective.size()); }
  // Throws std::invalid_argument on inconsistent dimensions.
  void Validate() const;
  // Largest violation of any constraint or bound at x.
  double MaxViolation(const Eigen::VectorXd& x) const;
};

enum class LpStatus { kOptimal, kFeasible, kInfeasible, kUnbounded };

std::string ToString(LpStatus status);

struct LpSolution {
  // kFeasible is reported instead of kOptimal when the objective is zero.
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  int pivots = 0;
};

struct LpOptions {
  double pivot_tol = 1e-9;
  int max_pivots = 100000;
};

// Dense two-phase primal simplex, Dantzig pricing with a Bland fallback on
// degenerate runs. Deterministic: equal inputs give equal pivot sequences. Throws std::runtime_error when the pivot
// guard trips.
LpSolution SolveLp(const LinearProgram& problem, const LpOptions& options = {});

}  // namespace kmg

#endif  // KMG_LP_H_
