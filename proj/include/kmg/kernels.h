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

#ifndef KMG_KERNELS_H_
#define KMG_KERNELS_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kmg/game.h"

namespace kmg {

// phi_V(z) = sum_{s'} phi(s'|z) V(s').
using FeatureVector = Eigen::VectorXd;

FeatureVector PhiV(const KernelMixtureGame& game, int z, const ValueTable& v);

// phi_V(z) for every tuple, one column per tuple (feature_dim x n_tuples).
Eigen::MatrixXd PhiVAll(const KernelMixtureGame& game, const ValueTable& v);

// k_{V1,V2}(z1, z2) = <phi_{V1}(z1), phi_{V2}(z2)>.
double WeightedKernel(const KernelMixtureGame& game, const ValueTable& v1,
                      const ValueTable& v2, int z1, int z2);

// Ridge-regression memory of one (player, step) stream, accessed only through
// Gram quantities. Entry p stores a feature, a target and a normalizer R_p;
// the regression runs on feature/R_p against target/R_p, so
//   K[p,q] = <f_p, f_q> / (R_p R_q),   y_p = target_p / R_p.
// The Cholesky factor of K + lambda I grows one bordered row per append and is
// rebuilt from scratch (with jitter) only when the border breaks down or
// lambda changes.
class GramState {
 public:
  GramState() = default;
  GramState(int feature_dim, double lambda);

  // Throws std::invalid_argument on non-finite input or normalizer <= 0.
  void Append(const FeatureVector& feature, double target,
              double normalizer = 1.0);

  // Ridge mean k(z)^T (K + lambda I)^{-1} y; zero when empty.
  double Mean(const FeatureVector& query) const;

  // lambda^{-1/2} [k(z,z) - k(z)^T (K + lambda I)^{-1} k(z)]^{1/2}, with the
  // bracket clipped at zero. `clipped`, when given, is set if that happened.
  double Width(const FeatureVector& query, bool* clipped = nullptr) const;

  // Batched Mean/Width over the columns of `queries`. Returns the number of
  // clipped brackets.
  int Predict(const Eigen::MatrixXd& queries, Eigen::VectorXd* means,
              Eigen::VectorXd* widths) const;

  // 1/2 logdet(I + K / lambda).
  double InformationGain() const;

  // Changes the ridge parameter and refactorizes.
  void SetLambda(double lambda);

  int size() const { return size_; }
  int feature_dim() const { return dim_; }
  double lambda() const { return lambda_; }
  double jitter() const { return jitter_; }

  const Eigen::VectorXd& dual_weights() const { return dual_; }
  Eigen::MatrixXd Gram() const;
  Eigen::VectorXd ScaledTargets() const { return y_.head(size_); }
  FeatureVector feature(int p) const { return raw_.col(p); }
  double target(int p) const { return targets_(p); }
  double normalizer(int p) const { return normalizers_(p); }

  // Relative residual ||(K + lambda I) w - y|| / max(1, ||y||).
  double DualResidual() const;

  // min{1, w^2} of every appended (normalized) feature, evaluated against the
  // data before it, and their running sum.
  const std::vector<double>& append_widths_sq() const { return append_w2_; }
  double potential_sum() const { return potential_sum_; }

  // Negative-control hook: perturbs the cached dual weights.
  void CorruptDualWeightsForTesting(double delta) { dual_.array() += delta; }

 private:
  void Reserve(int capacity);
  void Refactor();
  void RefreshDual();

  int dim_ = 0;
  double lambda_ = 1.0;
  double jitter_ = 0.0;
  int size_ = 0;
  Eigen::MatrixXd raw_;
  Eigen::MatrixXd scaled_;
  Eigen::VectorXd targets_;
  Eigen::VectorXd normalizers_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd chol_;  // lower factor of K + (lambda + jitter) I
  Eigen::VectorXd dual_;
  double log_diag_sum_ = 0.0;
  std::vector<double> append_w2_;
  double potential_sum_ = 0.0;
};

enum class Variant { kHoeffding, kBernstein, kMisspecified };

std::string ToString(Variant variant);
Variant ParseVariant(const std::string& name);

struct BonusParams {
  double lambda = 1.0;
  double param_bound = 1.0;  // B
  int horizon = 1;           // H
  double delta = 0.05;
  Variant variant = Variant::kHoeffding;
  double iota = 0.0;
  double beta_scale = 1.0;
  // Bernstein only.
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double alpha = 1.0;

  // Throws std::invalid_argument on out-of-range values.
  void Validate() const;
};

// beta_scale * H * sqrt(2 G + 2 + 4 log(1/delta) + 2 lambda (B/H)^2).
double BetaHoeffding(const BonusParams& params, double gamma_hat);

// beta_scale * H * sqrt(2 G + 3 + 6 log(1/delta) + 3 lambda (B/H)^2
//                       + 3 iota^2 t).
double BetaMisspecified(const BonusParams& params, double gamma_hat, int t);

struct BernsteinBetas {
  double beta = 0.0;   // bonus multiplier in the weighted Q update
  double beta1 = 0.0;  // first-moment confidence radius
  double beta2 = 0.0;  // second-moment confidence radius
};

// With L = log(4 t^2 H / delta):
//   beta1 = (16H/alpha) sqrt(G1 L) + (8H/alpha) L + sqrt(lambda1) B
//   beta2 = 16 H^2 sqrt(G2 L) + 8 H^2 L + sqrt(lambda2) B
//   beta  = 16 sqrt(G1 L) + (8H/alpha) L + sqrt(lambda1) B
// each times beta_scale. G1 is the information gain at lambda1 alpha^2, G2 at
// lambda2 / H^2.
BernsteinBetas BetaBernsteinSchedules(const BonusParams& params,
                                      double gamma_first, double gamma_second,
                                      int t);

struct VarianceEstimate {
  double r_squared = 0.0;  // max{V_est + E, alpha^2}
  double error_term = 0.0;  // E
  double variance = 0.0;    // V_est
};

// Conditional-variance upper bound for the value V at tuple z, from the
// weighted first-moment state (targets V) and the second-moment state
// (targets V^2).
VarianceEstimate EstimateVariance(const GramState& first,
                                  const GramState& second,
                                  const FeatureVector& phi_v,
                                  const FeatureVector& phi_v_squared,
                                  const BernsteinBetas& betas,
                                  const BonusParams& params);

}  // namespace kmg

#endif  // KMG_KERNELS_H_
