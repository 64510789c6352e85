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

#include "kmg/game.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "kmg/equilibrium.h"

namespace kmg {
namespace {

using json = nlohmann::json;

constexpr char kGameFormat[] = "kmg-v1";

Eigen::VectorXd SampleDirichlet(Rng& rng, int n, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = gamma(rng);
  const double total = v.sum();
  if (total <= 0.0) return Eigen::VectorXd::Constant(n, 1.0 / n);
  return v / total;
}

// Largest ||sum_s phi(s|z) V(s)||_2 over ||V||_inf <= 1. The norm is convex
// in V, so the maximum sits at a vertex of the cube.
double MaxFeatureNorm(const Eigen::MatrixXd& phi) {
  const int n = static_cast<int>(phi.rows());
  if (n > 16) {
    double bound = 0.0;
    for (int s = 0; s < n; ++s) bound += phi.row(s).norm();
    return bound;
  }
  double best = 0.0;
  Eigen::VectorXd v(n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    for (int s = 0; s < n; ++s) v(s) = (mask >> s) & 1u ? 1.0 : -1.0;
    best = std::max(best, (phi.transpose() * v).norm());
  }
  return best;
}

json MatrixToJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json VectorToJson(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd MatrixFromJson(const json& j, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw std::invalid_argument("game file: matrix row count mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols) {
      throw std::invalid_argument("game file: matrix column count mismatch");
    }
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Eigen::VectorXd VectorFromJson(const json& j, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw std::invalid_argument("game file: vector length mismatch");
  }
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = j[i].get<double>();
  return v;
}

}  // namespace

KernelMixtureGame::KernelMixtureGame(int n_states, int n_actions, int horizon,
                                     int feature_dim,
                                     std::vector<Eigen::VectorXd> reward,
                                     std::vector<Eigen::MatrixXd> features,
                                     std::vector<Eigen::VectorXd> theta,
                                     double param_bound, int initial_state,
                                     double iota,
                                     std::vector<Eigen::MatrixXd> noise)
    : n_states_(n_states),
      n_actions_(n_actions),
      horizon_(horizon),
      feature_dim_(feature_dim),
      initial_state_(initial_state),
      param_bound_(param_bound),
      iota_(iota),
      reward_(std::move(reward)),
      features_(std::move(features)),
      theta_(std::move(theta)),
      noise_(std::move(noise)) {
  if (n_states <= 0 || n_actions <= 0 || horizon <= 0 || feature_dim <= 0) {
    throw std::invalid_argument("game dimensions must be positive");
  }
  if (initial_state < 0 || initial_state >= n_states) {
    throw std::invalid_argument("initial state out of range");
  }
  const int z_count = n_tuples();
  if (static_cast<int>(reward_.size()) != horizon ||
      static_cast<int>(theta_.size()) != horizon ||
      static_cast<int>(features_.size()) != z_count) {
    throw std::invalid_argument("game tables have wrong outer sizes");
  }
  if (!noise_.empty() && static_cast<int>(noise_.size()) != horizon) {
    throw std::invalid_argument("noise table must cover every step");
  }
  if (iota < 0.0 || iota > 1.0) {
    throw std::invalid_argument("misspecification weight must be in [0, 1]");
  }
  for (int h = 0; h < horizon; ++h) {
    if (reward_[h].size() != z_count || theta_[h].size() != feature_dim) {
      throw std::invalid_argument("reward or theta has the wrong length");
    }
    if (!noise_.empty() &&
        (noise_[h].rows() != z_count || noise_[h].cols() != n_states)) {
      throw std::invalid_argument("noise matrix has the wrong shape");
    }
  }
  for (const auto& phi : features_) {
    if (phi.rows() != n_states || phi.cols() != feature_dim) {
      throw std::invalid_argument("feature matrix has the wrong shape");
    }
  }

  transitions_.resize(horizon);
  for (int h = 0; h < horizon; ++h) {
    Eigen::MatrixXd p(z_count, n_states);
    for (int z = 0; z < z_count; ++z) {
      p.row(z) = (features_[z] * theta_[h]).transpose();
    }
    if (!noise_.empty()) p = (1.0 - iota_) * p + iota_ * noise_[h];
    transitions_[h] = std::move(p);
  }
}

void KernelMixtureGame::Validate(double tol) const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("game invariant violated: " + what);
  };
  for (int h = 0; h < horizon_; ++h) {
    if (reward_[h].cwiseAbs().maxCoeff() > 1.0) fail("reward outside [-1, 1]");
    if (theta_[h].norm() > param_bound_ + tol) fail("||theta_h|| exceeds B");
    for (int z = 0; z < n_tuples(); ++z) {
      const Eigen::VectorXd in_model = features_[z] * theta_[h];
      if (in_model.minCoeff() < -tol) fail("negative in-model probability");
      if (std::abs(in_model.sum() - 1.0) > tol) fail("in-model row sum != 1");
      const Eigen::VectorXd row = transitions_[h].row(z).transpose();
      if (row.minCoeff() < -tol || std::abs(row.sum() - 1.0) > tol) {
        fail("realized transition is not a distribution");
      }
      if (0.5 * (row - in_model).cwiseAbs().sum() > iota_ + tol) {
        fail("total variation to in-model transition exceeds iota");
      }
      if (!noise_.empty()) {
        const Eigen::VectorXd off = noise_[h].row(z).transpose();
        if (off.minCoeff() < -tol || std::abs(off.sum() - 1.0) > tol) {
          fail("off-model row is not a distribution");
        }
      }
    }
  }
  for (int z = 0; z < n_tuples(); ++z) {
    if (MaxFeatureNorm(features_[z]) > 1.0 + tol) {
      fail("||phi_V(z)|| exceeds 1 for some ||V||_inf <= 1");
    }
  }
}

KernelMixtureGame KernelMixtureGame::RelabelStates(
    const std::vector<int>& permutation) const {
  if (static_cast<int>(permutation.size()) != n_states_) {
    throw std::invalid_argument("permutation size mismatch");
  }
  const int z_count = n_tuples();
  std::vector<Eigen::VectorXd> reward(horizon_, Eigen::VectorXd(z_count));
  std::vector<Eigen::MatrixXd> features(z_count);
  std::vector<Eigen::MatrixXd> noise;
  if (has_noise()) noise.assign(horizon_, Eigen::MatrixXd(z_count, n_states_));
  for (int x = 0; x < n_states_; ++x) {
    for (int a = 0; a < n_actions_; ++a) {
      for (int b = 0; b < n_actions_; ++b) {
        const int z = TupleIndex(x, a, b);
        const int nz = TupleIndex(permutation[x], a, b);
        Eigen::MatrixXd phi(n_states_, feature_dim_);
        for (int s = 0; s < n_states_; ++s) {
          phi.row(permutation[s]) = features_[z].row(s);
        }
        features[nz] = std::move(phi);
        for (int h = 0; h < horizon_; ++h) {
          reward[h](nz) = reward_[h](z);
          if (has_noise()) {
            for (int s = 0; s < n_states_; ++s) {
              noise[h](nz, permutation[s]) = noise_[h](z, s);
            }
          }
        }
      }
    }
  }
  return KernelMixtureGame(n_states_, n_actions_, horizon_, feature_dim_,
                           std::move(reward), std::move(features), theta_,
                           param_bound_, permutation[initial_state_], iota_,
                           std::move(noise));
}

MarkovPolicy MarkovPolicy::Uniform(int horizon, int n_states, int n_actions) {
  MarkovPolicy policy;
  policy.probs.assign(horizon, Eigen::MatrixXd::Constant(n_states, n_actions,
                                                         1.0 / n_actions));
  return policy;
}

void MarkovPolicy::Validate(double tol) const {
  for (const auto& step : probs) {
    for (int x = 0; x < step.rows(); ++x) {
      if (step.row(x).minCoeff() < 0.0 ||
          std::abs(step.row(x).sum() - 1.0) > tol) {
        throw std::invalid_argument("policy row is not a distribution");
      }
    }
  }
}

Eigen::VectorXd TransitionDistribution(const KernelMixtureGame& game, int h,
                                       int z) {
  if (h < 0 || h >= game.horizon()) throw std::out_of_range("step out of range");
  if (z < 0 || z >= game.n_tuples()) throw std::out_of_range("tuple out of range");
  return game.transitions(h).row(z).transpose();
}

int SampleIndex(Rng& rng, const Eigen::Ref<const Eigen::VectorXd>& probs) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double cumulative = 0.0;
  int last_positive = 0;
  for (int i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    cumulative += probs(i);
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

int SampleNextState(Rng& rng, const KernelMixtureGame& game, int h, int z) {
  if (h < 0 || h >= game.horizon() || z < 0 || z >= game.n_tuples()) {
    throw std::out_of_range("SampleNextState: index out of range");
  }
  return SampleIndex(rng, game.transitions(h).row(z).transpose());
}

namespace {

void CheckPolicyShape(const KernelMixtureGame& game, const MarkovPolicy& p) {
  if (static_cast<int>(p.probs.size()) != game.horizon()) {
    throw std::invalid_argument("policy horizon mismatch");
  }
  for (const auto& step : p.probs) {
    if (step.rows() != game.n_states() || step.cols() != game.n_actions()) {
      throw std::invalid_argument("policy shape mismatch");
    }
  }
}

// Q_h(x, a, b) laid out as a tuple-indexed vector.
Eigen::VectorXd StepQ(const KernelMixtureGame& game, int h,
                      const ValueTable& next) {
  return game.rewards(h) + game.transitions(h) * next;
}

}  // namespace

BestResponse BestResponseValue(const KernelMixtureGame& game,
                               const MarkovPolicy& opponent_policy,
                               Player responder) {
  CheckPolicyShape(game, opponent_policy);
  const int n_h = game.horizon(), n_s = game.n_states(), n_a = game.n_actions();
  BestResponse br;
  br.values.assign(n_h + 1, ValueTable::Zero(n_s));
  br.q_values.assign(n_h, Eigen::MatrixXd::Zero(n_s, n_a));
  br.policy.probs.assign(n_h, Eigen::MatrixXd::Zero(n_s, n_a));
  const bool maximize = responder == Player::kMax;
  for (int h = n_h - 1; h >= 0; --h) {
    const Eigen::VectorXd q = StepQ(game, h, br.values[h + 1]);
    for (int x = 0; x < n_s; ++x) {
      int best = 0;
      for (int own = 0; own < n_a; ++own) {
        double v = 0.0;
        for (int other = 0; other < n_a; ++other) {
          const int z = maximize ? game.TupleIndex(x, own, other)
                                 : game.TupleIndex(x, other, own);
          v += opponent_policy.probs[h](x, other) * q(z);
        }
        br.q_values[h](x, own) = v;
        const double incumbent = br.q_values[h](x, best);
        if (maximize ? v > incumbent : v < incumbent) best = own;
      }
      br.values[h](x) = br.q_values[h](x, best);
      br.policy.probs[h](x, best) = 1.0;
    }
  }
  return br;
}

std::vector<ValueTable> PolicyValue(const KernelMixtureGame& game,
                                    const MarkovPolicy& pi,
                                    const MarkovPolicy& nu) {
  CheckPolicyShape(game, pi);
  CheckPolicyShape(game, nu);
  const int n_h = game.horizon(), n_s = game.n_states(), n_a = game.n_actions();
  std::vector<ValueTable> values(n_h + 1, ValueTable::Zero(n_s));
  for (int h = n_h - 1; h >= 0; --h) {
    const Eigen::VectorXd q = StepQ(game, h, values[h + 1]);
    for (int x = 0; x < n_s; ++x) {
      double v = 0.0;
      for (int a = 0; a < n_a; ++a) {
        for (int b = 0; b < n_a; ++b) {
          v += pi.probs[h](x, a) * nu.probs[h](x, b) * q(game.TupleIndex(x, a, b));
        }
      }
      values[h](x) = v;
    }
  }
  return values;
}

NashSolution NashValue(const KernelMixtureGame& game) {
  const int n_h = game.horizon(), n_s = game.n_states(), n_a = game.n_actions();
  NashSolution nash;
  nash.values.assign(n_h + 1, ValueTable::Zero(n_s));
  nash.max_policy.probs.assign(n_h, Eigen::MatrixXd::Zero(n_s, n_a));
  nash.min_policy.probs.assign(n_h, Eigen::MatrixXd::Zero(n_s, n_a));
  for (int h = n_h - 1; h >= 0; --h) {
    const Eigen::VectorXd q = StepQ(game, h, nash.values[h + 1]);
    for (int x = 0; x < n_s; ++x) {
      PayoffMatrix payoff(n_a, n_a);
      for (int a = 0; a < n_a; ++a) {
        for (int b = 0; b < n_a; ++b) payoff(a, b) = q(game.TupleIndex(x, a, b));
      }
      const MatrixGameSolution stage = MatrixGameValue(payoff);
      nash.values[h](x) = stage.value;
      nash.max_policy.probs[h].row(x) = stage.row_strategy.transpose();
      nash.min_policy.probs[h].row(x) = stage.col_strategy.transpose();
    }
  }
  return nash;
}

double DualityGap(const KernelMixtureGame& game, const MarkovPolicy& pi,
                  const MarkovPolicy& nu) {
  const int x1 = game.initial_state();
  const double upper = BestResponseValue(game, nu, Player::kMax).values[0](x1);
  const double lower = BestResponseValue(game, pi, Player::kMin).values[0](x1);
  return upper - lower;
}

KernelMixtureGame GenerateRandomGame(const GameConfig& config, Rng& rng) {
  if (config.n_states <= 0 || config.n_actions <= 0 || config.horizon <= 0 ||
      config.feature_dim <= 0) {
    throw std::invalid_argument("GenerateRandomGame: dimensions must be positive");
  }
  if (config.iota < 0.0 || config.iota > 1.0 || config.dirichlet_alpha <= 0.0) {
    throw std::invalid_argument("GenerateRandomGame: bad iota or concentration");
  }
  const int n_s = config.n_states, n_a = config.n_actions;
  const int n_h = config.horizon, d = config.feature_dim;
  const int z_count = n_s * n_a * n_a;
  const double root_d = std::sqrt(static_cast<double>(d));

  std::uniform_real_distribution<double> reward_dist(-1.0, 1.0);
  std::vector<Eigen::VectorXd> reward(n_h, Eigen::VectorXd(z_count));
  for (int h = 0; h < n_h; ++h) {
    for (int z = 0; z < z_count; ++z) reward[h](z) = reward_dist(rng);
  }

  std::vector<Eigen::MatrixXd> features(z_count, Eigen::MatrixXd(n_s, d));
  for (int z = 0; z < z_count; ++z) {
    for (int i = 0; i < d; ++i) {
      features[z].col(i) = SampleDirichlet(rng, n_s, config.dirichlet_alpha) / root_d;
    }
  }

  std::vector<Eigen::VectorXd> theta(n_h);
  for (int h = 0; h < n_h; ++h) theta[h] = root_d * SampleDirichlet(rng, d, 1.0);

  // Drawn last so the in-model part does not depend on iota.
  std::vector<Eigen::MatrixXd> noise;
  if (config.iota > 0.0) {
    noise.assign(n_h, Eigen::MatrixXd(z_count, n_s));
    for (int h = 0; h < n_h; ++h) {
      for (int z = 0; z < z_count; ++z) {
        noise[h].row(z) =
            SampleDirichlet(rng, n_s, config.dirichlet_alpha).transpose();
      }
    }
  }
  return KernelMixtureGame(n_s, n_a, n_h, d, std::move(reward),
                           std::move(features), std::move(theta), root_d,
                           config.initial_state, config.iota, std::move(noise));
}

std::string SerializeGame(const KernelMixtureGame& game) {
  json j;
  j["format"] = kGameFormat;
  j["n_states"] = game.n_states();
  j["n_actions"] = game.n_actions();
  j["horizon"] = game.horizon();
  j["feature_dim"] = game.feature_dim();
  j["initial_state"] = game.initial_state();
  j["param_bound"] = game.param_bound();
  j["iota"] = game.iota();
  json reward = json::array(), theta = json::array(), noise = json::array();
  for (int h = 0; h < game.horizon(); ++h) {
    reward.push_back(VectorToJson(game.rewards(h)));
    theta.push_back(VectorToJson(game.theta(h)));
    if (game.has_noise()) noise.push_back(MatrixToJson(game.noise(h)));
  }
  json features = json::array();
  for (int z = 0; z < game.n_tuples(); ++z) {
    features.push_back(MatrixToJson(game.features(z)));
  }
  j["reward"] = std::move(reward);
  j["features"] = std::move(features);
  j["theta"] = std::move(theta);
  j["noise"] = std::move(noise);
  return j.dump(1) + "\n";
}

KernelMixtureGame DeserializeGame(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != kGameFormat) {
    throw std::invalid_argument("game file: expected format kmg-v1");
  }
  const int n_s = j.at("n_states").get<int>();
  const int n_a = j.at("n_actions").get<int>();
  const int n_h = j.at("horizon").get<int>();
  const int d = j.at("feature_dim").get<int>();
  if (n_s <= 0 || n_a <= 0 || n_h <= 0 || d <= 0) {
    throw std::invalid_argument("game file: dimensions must be positive");
  }
  const int z_count = n_s * n_a * n_a;
  std::vector<Eigen::VectorXd> reward, theta;
  std::vector<Eigen::MatrixXd> features, noise;
  if (j.at("reward").size() != static_cast<size_t>(n_h) ||
      j.at("theta").size() != static_cast<size_t>(n_h) ||
      j.at("features").size() != static_cast<size_t>(z_count)) {
    throw std::invalid_argument("game file: table sizes mismatch");
  }
  for (int h = 0; h < n_h; ++h) {
    reward.push_back(VectorFromJson(j["reward"][h], z_count));
    theta.push_back(VectorFromJson(j["theta"][h], d));
  }
  for (int z = 0; z < z_count; ++z) {
    features.push_back(MatrixFromJson(j["features"][z], n_s, d));
  }
  const json& jn = j.at("noise");
  if (!jn.empty()) {
    if (jn.size() != static_cast<size_t>(n_h)) {
      throw std::invalid_argument("game file: noise must cover every step");
    }
    for (int h = 0; h < n_h; ++h) noise.push_back(MatrixFromJson(jn[h], z_count, n_s));
  }
  return KernelMixtureGame(n_s, n_a, n_h, d, std::move(reward),
                           std::move(features), std::move(theta),
                           j.at("param_bound").get<double>(),
                           j.at("initial_state").get<int>(),
                           j.at("iota").get<double>(), std::move(noise));
}

void SaveGame(const KernelMixtureGame& game, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write game file: " + path);
  out << SerializeGame(game);
}

KernelMixtureGame LoadGame(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read game file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return DeserializeGame(buffer.str());
}

}  // namespace kmg
