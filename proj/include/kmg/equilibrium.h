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

#ifndef KMG_EQUILIBRIUM_H_
#define KMG_EQUILIBRIUM_H_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace kmg {

// Rows index the max player's action, columns the min player's.
using PayoffMatrix = Eigen::MatrixXd;

// Probability table over action pairs with its two marginals.
class JointDistribution {
 public:
  JointDistribution() = default;
  // Clips entries above -1e-10 to zero and renormalizes; throws
  // std::invalid_argument on anything further from a distribution.
  explicit JointDistribution(Eigen::MatrixXd probs);

  static JointDistribution Product(const Eigen::VectorXd& row,
                                   const Eigen::VectorXd& col);

  const Eigen::MatrixXd& probs() const { return probs_; }
  // Marginal over the first coordinate (max player).
  const Eigen::VectorXd& row_marginal() const { return row_marginal_; }
  // Marginal over the second coordinate (min player).
  const Eigen::VectorXd& col_marginal() const { return col_marginal_; }

  double Expectation(const PayoffMatrix& payoff) const {
    return probs_.cwiseProduct(payoff).sum();
  }

 private:
  Eigen::MatrixXd probs_;
  Eigen::VectorXd row_marginal_;
  Eigen::VectorXd col_marginal_;
};

struct CceOptions {
  // Maximize E_sigma[q_max - q_min] instead of the constant objective.
  bool maximize_gap = false;
  double tolerance = 1e-8;
};

class CceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Largest violation of the two coarse-correlated-equilibrium constraint
// families: no fixed a' beats sigma on q_max against the column marginal, and
// no fixed b' undercuts sigma on q_min against the row marginal.
double CceViolation(const PayoffMatrix& q_max, const PayoffMatrix& q_min,
                    const Eigen::MatrixXd& sigma);

// Feasibility LP over the |A|^2 entries of sigma. Throws CceError (with both
// matrices in the message) if the LP is infeasible or the output fails the
// constraint check. `pivots`, when given, receives the simplex pivot count.
JointDistribution FindCce(const PayoffMatrix& q_max, const PayoffMatrix& q_min,
                          const CceOptions& options = {},
                          int* pivots = nullptr);

struct MatrixGameSolution {
  double value = 0.0;
  Eigen::VectorXd row_strategy;  // maximizer
  Eigen::VectorXd col_strategy;  // minimizer
};

// Zero-sum matrix game by the minimax LP, one LP per player.
MatrixGameSolution MatrixGameValue(const PayoffMatrix& payoff);

}  // namespace kmg

#endif  // KMG_EQUILIBRIUM_H_
