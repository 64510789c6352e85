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

#include "kmg/kernels.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kmg {
namespace {

constexpr double kJitterStart = 1e-12;
constexpr double kJitterMax = 1e-6;

}  // namespace

FeatureVector PhiV(const KernelMixtureGame& game, int z, const ValueTable& v) {
  if (v.size() != game.n_states()) {
    throw std::invalid_argument("PhiV: value table has the wrong length");
  }
  if (z < 0 || z >= game.n_tuples()) throw std::out_of_range("PhiV: tuple");
  return game.features(z).transpose() * v;
}

Eigen::MatrixXd PhiVAll(const KernelMixtureGame& game, const ValueTable& v) {
  if (v.size() != game.n_states()) {
    throw std::invalid_argument("PhiVAll: value table has the wrong length");
  }
  Eigen::MatrixXd out(game.feature_dim(), game.n_tuples());
  for (int z = 0; z < game.n_tuples(); ++z) {
    out.col(z).noalias() = game.features(z).transpose() * v;
  }
  return out;
}

double WeightedKernel(const KernelMixtureGame& game, const ValueTable& v1,
                      const ValueTable& v2, int z1, int z2) {
  return PhiV(game, z1, v1).dot(PhiV(game, z2, v2));
}

GramState::GramState(int feature_dim, double lambda)
    : dim_(feature_dim), lambda_(lambda) {
  if (feature_dim <= 0) throw std::invalid_argument("GramState: feature_dim");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("GramState: lambda must be positive");
  }
  Reserve(16);
}

void GramState::Reserve(int capacity) {
  if (capacity <= raw_.cols()) return;
  auto grow = [&](Eigen::MatrixXd& m, int rows) {
    Eigen::MatrixXd next(rows, capacity);
    next.leftCols(size_) = m.leftCols(size_);
    m.swap(next);
  };
  grow(raw_, dim_);
  grow(scaled_, dim_);
  for (Eigen::VectorXd* v : {&targets_, &normalizers_, &y_}) {
    Eigen::VectorXd next(capacity);
    next.head(size_) = v->head(size_);
    v->swap(next);
  }
  Eigen::MatrixXd chol(capacity, capacity);
  chol.topLeftCorner(size_, size_) = chol_.topLeftCorner(size_, size_);
  chol_.swap(chol);
}

void GramState::Append(const FeatureVector& feature, double target,
                       double normalizer) {
  if (feature.size() != dim_) {
    throw std::invalid_argument("GramState::Append: feature dimension");
  }
  if (!feature.allFinite() || !std::isfinite(target) ||
      !std::isfinite(normalizer)) {
    throw std::invalid_argument("GramState::Append: non-finite input");
  }
  if (normalizer <= 0.0) {
    throw std::invalid_argument("GramState::Append: normalizer must be > 0");
  }
  if (size_ == raw_.cols()) Reserve(std::max(16, 2 * size_));

  const int t = size_;
  const Eigen::VectorXd u = feature / normalizer;
  raw_.col(t) = feature;
  scaled_.col(t) = u;
  targets_(t) = target;
  normalizers_(t) = normalizer;
  y_(t) = target / normalizer;

  const double self = u.squaredNorm();
  Eigen::VectorXd border;
  if (t > 0) {
    border = scaled_.leftCols(t).transpose() * u;
    chol_.topLeftCorner(t, t).triangularView<Eigen::Lower>().solveInPlace(border);
  } else {
    border.resize(0);
  }
  const double explained = border.squaredNorm();
  const double w2 = std::max(0.0, (self - explained) / lambda_);
  append_w2_.push_back(std::min(1.0, w2));
  potential_sum_ += append_w2_.back();

  const double pivot = self + lambda_ + jitter_ - explained;
  size_ = t + 1;
  if (pivot > 1e-10 * (self + lambda_)) {
    chol_.row(t).head(t) = border.transpose();
    chol_(t, t) = std::sqrt(pivot);
    log_diag_sum_ += std::log(chol_(t, t));
  } else {
    Refactor();
  }
  RefreshDual();
}

void GramState::Refactor() {
  const int t = size_;
  if (t == 0) {
    log_diag_sum_ = 0.0;
    jitter_ = 0.0;
    return;
  }
  const Eigen::MatrixXd base =
      scaled_.leftCols(t).transpose() * scaled_.leftCols(t);
  double jitter = 0.0;
  while (true) {
    Eigen::MatrixXd m = base;
    m.diagonal().array() += lambda_ + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
      chol_.topLeftCorner(t, t) = llt.matrixL();
      jitter_ = jitter;
      break;
    }
    jitter = jitter == 0.0 ? kJitterStart : jitter * 10.0;
    if (jitter > kJitterMax * 1.0000001) {
      throw std::runtime_error("GramState: Cholesky failed beyond max jitter");
    }
  }
  log_diag_sum_ = 0.0;
  for (int i = 0; i < t; ++i) log_diag_sum_ += std::log(chol_(i, i));
}

void GramState::RefreshDual() {
  const int t = size_;
  dual_ = y_.head(t);
  const auto l = chol_.topLeftCorner(t, t).triangularView<Eigen::Lower>();
  l.solveInPlace(dual_);
  l.transpose().solveInPlace(dual_);
}

void GramState::SetLambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("GramState::SetLambda: lambda must be > 0");
  }
  if (lambda == lambda_) return;
  lambda_ = lambda;
  jitter_ = 0.0;
  Refactor();
  RefreshDual();
}

double GramState::Mean(const FeatureVector& query) const {
  if (query.size() != dim_) throw std::invalid_argument("Mean: dimension");
  if (size_ == 0) return 0.0;
  return (scaled_.leftCols(size_).transpose() * query).dot(dual_);
}

double GramState::Width(const FeatureVector& query, bool* clipped) const {
  if (query.size() != dim_) throw std::invalid_argument("Width: dimension");
  double bracket = query.squaredNorm();
  if (size_ > 0) {
    Eigen::VectorXd k = scaled_.leftCols(size_).transpose() * query;
    chol_.topLeftCorner(size_, size_).triangularView<Eigen::Lower>().solveInPlace(k);
    bracket -= k.squaredNorm();
  }
  if (clipped != nullptr) *clipped = bracket < 0.0;
  return std::sqrt(std::max(0.0, bracket) / lambda_);
}

int GramState::Predict(const Eigen::MatrixXd& queries, Eigen::VectorXd* means,
                       Eigen::VectorXd* widths) const {
  if (queries.rows() != dim_) throw std::invalid_argument("Predict: dimension");
  const int m = static_cast<int>(queries.cols());
  Eigen::VectorXd bracket = queries.colwise().squaredNorm().transpose();
  if (size_ == 0) {
    *means = Eigen::VectorXd::Zero(m);
  } else {
    Eigen::MatrixXd k = scaled_.leftCols(size_).transpose() * queries;
    *means = k.transpose() * dual_;
    chol_.topLeftCorner(size_, size_).triangularView<Eigen::Lower>().solveInPlace(k);
    bracket -= k.colwise().squaredNorm().transpose();
  }
  int clips = 0;
  widths->resize(m);
  for (int j = 0; j < m; ++j) {
    if (bracket(j) < 0.0) ++clips;
    (*widths)(j) = std::sqrt(std::max(0.0, bracket(j)) / lambda_);
  }
  return clips;
}

double GramState::InformationGain() const {
  // 1/2 logdet((K + lambda I) / lambda) = sum log L_ii - t/2 log lambda.
  return log_diag_sum_ - 0.5 * size_ * std::log(lambda_);
}

Eigen::MatrixXd GramState::Gram() const {
  return scaled_.leftCols(size_).transpose() * scaled_.leftCols(size_);
}

double GramState::DualResidual() const {
  if (size_ == 0) return 0.0;
  Eigen::MatrixXd system = Gram();
  system.diagonal().array() += lambda_;
  const Eigen::VectorXd y = y_.head(size_);
  return (system * dual_ - y).norm() / std::max(1.0, y.norm());
}

std::string ToString(Variant variant) {
  switch (variant) {
    case Variant::kHoeffding:
      return "hoeffding";
    case Variant::kBernstein:
      return "bernstein";
    case Variant::kMisspecified:
      return "misspecified";
  }
  return "unknown";
}

Variant ParseVariant(const std::string& name) {
  if (name == "hoeffding") return Variant::kHoeffding;
  if (name == "bernstein") return Variant::kBernstein;
  if (name == "misspecified") return Variant::kMisspecified;
  throw std::invalid_argument("unknown variant: " + name);
}

void BonusParams::Validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(lambda) || !positive(lambda1) || !positive(lambda2) ||
      !positive(alpha)) {
    throw std::invalid_argument("BonusParams: lambdas and alpha must be > 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("BonusParams: delta must be in (0, 1)");
  }
  if (!(iota >= 0.0)) throw std::invalid_argument("BonusParams: iota < 0");
  if (!positive(beta_scale)) {
    throw std::invalid_argument("BonusParams: beta_scale must be > 0");
  }
  if (horizon <= 0 || !(param_bound >= 0.0)) {
    throw std::invalid_argument("BonusParams: horizon or B out of range");
  }
}

double BetaHoeffding(const BonusParams& params, double gamma_hat) {
  const double h = params.horizon;
  const double ratio = params.param_bound / h;
  const double inner = 2.0 * std::max(0.0, gamma_hat) + 2.0 +
                       4.0 * std::log(1.0 / params.delta) +
                       2.0 * params.lambda * ratio * ratio;
  return params.beta_scale * h * std::sqrt(inner);
}

double BetaMisspecified(const BonusParams& params, double gamma_hat, int t) {
  if (t < 1) throw std::invalid_argument("BetaMisspecified: t must be >= 1");
  const double h = params.horizon;
  const double ratio = params.param_bound / h;
  const double inner = 2.0 * std::max(0.0, gamma_hat) + 3.0 +
                       6.0 * std::log(1.0 / params.delta) +
                       3.0 * params.lambda * ratio * ratio +
                       3.0 * params.iota * params.iota * t;
  return params.beta_scale * h * std::sqrt(inner);
}

BernsteinBetas BetaBernsteinSchedules(const BonusParams& params,
                                      double gamma_first, double gamma_second,
                                      int t) {
  if (t < 1) throw std::invalid_argument("BetaBernsteinSchedules: t >= 1");
  const double h = params.horizon;
  const double log_term = std::log(4.0 * t * t * h / params.delta);
  const double root_first = std::sqrt(std::max(0.0, gamma_first) * log_term);
  const double root_second = std::sqrt(std::max(0.0, gamma_second) * log_term);
  const double bias1 = std::sqrt(params.lambda1) * params.param_bound;
  const double bias2 = std::sqrt(params.lambda2) * params.param_bound;
  const double h_over_alpha = h / params.alpha;

  BernsteinBetas betas;
  betas.beta1 = 16.0 * h_over_alpha * root_first + 8.0 * h_over_alpha * log_term + bias1;
  betas.beta2 = 16.0 * h * h * root_second + 8.0 * h * h * log_term + bias2;
  betas.beta = 16.0 * root_first + 8.0 * h_over_alpha * log_term + bias1;
  betas.beta1 *= params.beta_scale;
  betas.beta2 *= params.beta_scale;
  betas.beta *= params.beta_scale;
  return betas;
}

VarianceEstimate EstimateVariance(const GramState& first,
                                  const GramState& second,
                                  const FeatureVector& phi_v,
                                  const FeatureVector& phi_v_squared,
                                  const BernsteinBetas& betas,
                                  const BonusParams& params) {
  const double h = params.horizon;
  const double h2 = h * h;
  const double second_moment = std::clamp(second.Mean(phi_v_squared), 0.0, h2);
  const double first_moment = std::clamp(first.Mean(phi_v), -h, h);

  VarianceEstimate est;
  est.variance = second_moment - first_moment * first_moment;
  est.error_term = std::min(h2, betas.beta2 * second.Width(phi_v_squared)) +
                   std::min(h2, 2.0 * h * betas.beta1 * first.Width(phi_v));
  est.r_squared =
      std::max(est.variance + est.error_term, params.alpha * params.alpha);
  return est;
}

}  // namespace kmg
