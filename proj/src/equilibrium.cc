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

#include "kmg/equilibrium.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kmg/lp.h"

namespace kmg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string DescribeMatrices(const PayoffMatrix& q_max,
                             const PayoffMatrix& q_min) {
  std::ostringstream out;
  out.precision(17);
  out << "q_max =\n" << q_max << "\nq_min =\n" << q_min;
  return out.str();
}

Eigen::VectorXd CleanStrategy(const Eigen::VectorXd& p) {
  Eigen::VectorXd q = p.cwiseMax(0.0);
  const double total = q.sum();
  if (total <= 0.0) return Eigen::VectorXd::Constant(p.size(), 1.0 / p.size());
  return q / total;
}

}  // namespace

JointDistribution::JointDistribution(Eigen::MatrixXd probs)
    : probs_(std::move(probs)) {
  if (probs_.size() == 0 || !probs_.allFinite()) {
    throw std::invalid_argument("joint distribution must be finite, nonempty");
  }
  if (probs_.minCoeff() < -1e-10) {
    throw std::invalid_argument("joint distribution has a negative entry");
  }
  probs_ = probs_.cwiseMax(0.0);
  const double total = probs_.sum();
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("joint distribution does not sum to one");
  }
  probs_ /= total;
  row_marginal_ = probs_.rowwise().sum();
  col_marginal_ = probs_.colwise().sum().transpose();
}

JointDistribution JointDistribution::Product(const Eigen::VectorXd& row,
                                             const Eigen::VectorXd& col) {
  return JointDistribution(row * col.transpose());
}

double CceViolation(const PayoffMatrix& q_max, const PayoffMatrix& q_min,
                    const Eigen::MatrixXd& sigma) {
  const Eigen::VectorXd rows = sigma.rowwise().sum();
  const Eigen::VectorXd cols = sigma.colwise().sum().transpose();
  const double v_max = sigma.cwiseProduct(q_max).sum();
  const double v_min = sigma.cwiseProduct(q_min).sum();
  // Deviation payoffs: q_max * cols for the max player, rows^T q_min for min.
  const double gain_max = (q_max * cols).maxCoeff() - v_max;
  const double gain_min = v_min - (rows.transpose() * q_min).minCoeff();
  return std::max({0.0, gain_max, gain_min});
}

JointDistribution FindCce(const PayoffMatrix& q_max, const PayoffMatrix& q_min,
                          const CceOptions& options, int* pivots) {
  const int n = static_cast<int>(q_max.rows());
  if (n == 0 || q_max.cols() != n || q_min.rows() != n || q_min.cols() != n) {
    throw std::invalid_argument("FindCce: payoffs must be square and equal size");
  }
  if (!q_max.allFinite() || !q_min.allFinite()) {
    throw std::invalid_argument("FindCce: non-finite payoff");
  }

  // sigma(i, j) is variable i * n + j.
  LinearProgram lp = LinearProgram::NonNegative(n * n);
  lp.a_eq = Eigen::MatrixXd::Ones(1, n * n);
  lp.b_eq = Eigen::VectorXd::Ones(1);
  lp.a_ub = Eigen::MatrixXd::Zero(2 * n, n * n);
  lp.b_ub = Eigen::VectorXd::Zero(2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int var = i * n + j;
      for (int dev = 0; dev < n; ++dev) {
        lp.a_ub(dev, var) = q_max(dev, j) - q_max(i, j);
        lp.a_ub(n + dev, var) = q_min(i, j) - q_min(i, dev);
      }
      if (options.maximize_gap) lp.objective(var) = q_max(i, j) - q_min(i, j);
    }
  }

  const LpSolution sol = SolveLp(lp);
  if (pivots != nullptr) *pivots = sol.pivots;
  if (sol.status == LpStatus::kInfeasible || sol.status == LpStatus::kUnbounded) {
    throw CceError("FindCce: LP reported " + ToString(sol.status) + "\n" +
                   DescribeMatrices(q_max, q_min));
  }
  Eigen::MatrixXd sigma(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) sigma(i, j) = std::max(0.0, sol.x(i * n + j));
  }
  const double mass = sigma.sum();
  if (!(std::abs(mass - 1.0) <= 1e-6)) {
    throw CceError("FindCce: LP point is not a distribution\n" +
                   DescribeMatrices(q_max, q_min));
  }
  JointDistribution result(sigma / mass);
  const double scale = std::max(
      {1.0, q_max.cwiseAbs().maxCoeff(), q_min.cwiseAbs().maxCoeff()});
  if (CceViolation(q_max, q_min, result.probs()) > options.tolerance * scale) {
    throw CceError("FindCce: output violates CCE constraints\n" +
                   DescribeMatrices(q_max, q_min));
  }
  return result;
}

MatrixGameSolution MatrixGameValue(const PayoffMatrix& payoff) {
  const int rows = static_cast<int>(payoff.rows());
  const int cols = static_cast<int>(payoff.cols());
  if (rows == 0 || cols == 0 || !payoff.allFinite()) {
    throw std::invalid_argument("MatrixGameValue: empty or non-finite payoff");
  }

  // Max player: maximize v s.t. v <= (p^T P)_j for all j, p in simplex.
  LinearProgram row_lp = LinearProgram::NonNegative(rows + 1);
  row_lp.lower(rows) = -kInf;
  row_lp.objective(rows) = 1.0;
  row_lp.a_ub = Eigen::MatrixXd::Zero(cols, rows + 1);
  row_lp.a_ub.leftCols(rows) = -payoff.transpose();
  row_lp.a_ub.col(rows).setOnes();
  row_lp.b_ub = Eigen::VectorXd::Zero(cols);
  row_lp.a_eq = Eigen::MatrixXd::Zero(1, rows + 1);
  row_lp.a_eq.leftCols(rows).setOnes();
  row_lp.b_eq = Eigen::VectorXd::Ones(1);

  // Min player: minimize w s.t. (P q)_i <= w for all i, q in simplex.
  LinearProgram col_lp = LinearProgram::NonNegative(cols + 1);
  col_lp.lower(cols) = -kInf;
  col_lp.objective(cols) = -1.0;
  col_lp.a_ub = Eigen::MatrixXd::Zero(rows, cols + 1);
  col_lp.a_ub.leftCols(cols) = payoff;
  col_lp.a_ub.col(cols).setConstant(-1.0);
  col_lp.b_ub = Eigen::VectorXd::Zero(rows);
  col_lp.a_eq = Eigen::MatrixXd::Zero(1, cols + 1);
  col_lp.a_eq.leftCols(cols).setOnes();
  col_lp.b_eq = Eigen::VectorXd::Ones(1);

  const LpSolution row_sol = SolveLp(row_lp);
  const LpSolution col_sol = SolveLp(col_lp);
  if (row_sol.status != LpStatus::kOptimal ||
      col_sol.status != LpStatus::kOptimal) {
    throw std::runtime_error("MatrixGameValue: minimax LP failed");
  }
  MatrixGameSolution solution;
  solution.row_strategy = CleanStrategy(row_sol.x.head(rows));
  solution.col_strategy = CleanStrategy(col_sol.x.head(cols));
  // Both guarantees evaluated on the cleaned strategies; they agree at the
  // saddle point up to LP round-off.
  const double lower = (solution.row_strategy.transpose() * payoff).minCoeff();
  const double upper = (payoff * solution.col_strategy).maxCoeff();
  solution.value = 0.5 * (lower + upper);
  return solution;
}

}  // namespace kmg
