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

#ifndef KMG_GAME_H_
#define KMG_GAME_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kmg {

using Rng = std::mt19937_64;

// Value of one step over all states.
using ValueTable = Eigen::VectorXd;

enum class Player { kMax = 0, kMin = 1 };

// Finite-state, finite-action, episodic two-player zero-sum game whose
// transition at step h is P_h(s'|z) = <phi(s'|z), theta_h>, optionally mixed
// with an off-model distribution at weight iota.
//
// Steps are zero-based in code: h = 0..horizon-1 stands for 1..H. A tuple
// z = (x, a, b) is addressed by the flat index (x * A + a) * A + b.
class KernelMixtureGame {
 public:
  KernelMixtureGame() = default;

  // `reward[h]` has one entry per tuple. `features[z]` is an
  // n_states x feature_dim matrix whose row s' is phi(s'|z).
  // `noise[h]`, when non-empty, is a tuples x n_states row-stochastic matrix.
  KernelMixtureGame(int n_states, int n_actions, int horizon, int feature_dim,
                    std::vector<Eigen::VectorXd> reward,
                    std::vector<Eigen::MatrixXd> features,
                    std::vector<Eigen::VectorXd> theta, double param_bound,
                    int initial_state = 0, double iota = 0.0,
                    std::vector<Eigen::MatrixXd> noise = {});

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int horizon() const { return horizon_; }
  int feature_dim() const { return feature_dim_; }
  int n_tuples() const { return n_states_ * n_actions_ * n_actions_; }
  int initial_state() const { return initial_state_; }
  double param_bound() const { return param_bound_; }
  double iota() const { return iota_; }
  bool has_noise() const { return !noise_.empty(); }

  int TupleIndex(int x, int a, int b) const {
    return (x * n_actions_ + a) * n_actions_ + b;
  }

  double reward(int h, int z) const { return reward_[h](z); }
  const Eigen::VectorXd& rewards(int h) const { return reward_[h]; }
  const Eigen::MatrixXd& features(int z) const { return features_[z]; }
  const Eigen::VectorXd& theta(int h) const { return theta_[h]; }
  const Eigen::MatrixXd& noise(int h) const { return noise_[h]; }

  // Realized transition matrix of step h, tuples x n_states.
  const Eigen::MatrixXd& transitions(int h) const { return transitions_[h]; }

  // Checks every structural invariant; throws std::invalid_argument with the
  // first violation found.
  void Validate(double tol = 1e-9) const;

  // Copy with states permuted: new state p[s] carries old state s.
  KernelMixtureGame RelabelStates(const std::vector<int>& permutation) const;

 private:
  int n_states_ = 0;
  int n_actions_ = 0;
  int horizon_ = 0;
  int feature_dim_ = 0;
  int initial_state_ = 0;
  double param_bound_ = 0.0;
  double iota_ = 0.0;
  std::vector<Eigen::VectorXd> reward_;
  std::vector<Eigen::MatrixXd> features_;
  std::vector<Eigen::VectorXd> theta_;
  std::vector<Eigen::MatrixXd> noise_;
  std::vector<Eigen::MatrixXd> transitions_;
};

// One player's Markov policy: probs[h](x, a) = pi_h(a|x).
struct MarkovPolicy {
  std::vector<Eigen::MatrixXd> probs;

  static MarkovPolicy Uniform(int horizon, int n_states, int n_actions);
  // Throws std::invalid_argument when a row is not a distribution.
  void Validate(double tol = 1e-12) const;
};

struct Step {
  int state = 0;
  int max_action = 0;
  int min_action = 0;
  double reward = 0.0;
  int next_state = 0;
};

struct Trajectory {
  int episode = 0;
  std::vector<Step> steps;
};

// Transition of step h out of tuple z, in-model part mixed with the
// off-model part at weight iota. Throws std::out_of_range on bad indices.
Eigen::VectorXd TransitionDistribution(const KernelMixtureGame& game, int h,
                                       int z);

// Inverse-CDF draw over the fixed state ordering.
int SampleNextState(Rng& rng, const KernelMixtureGame& game, int h, int z);
int SampleIndex(Rng& rng, const Eigen::Ref<const Eigen::VectorXd>& probs);

struct BestResponse {
  std::vector<ValueTable> values;        // H + 1 tables, last is zero.
  std::vector<Eigen::MatrixXd> q_values;  // [h](x, own action)
  MarkovPolicy policy;                    // deterministic
};

// Exact best response of `responder` against the opponent's fixed policy.
BestResponse BestResponseValue(const KernelMixtureGame& game,
                               const MarkovPolicy& opponent_policy,
                               Player responder);

// V^{pi,nu}_h for every step; H + 1 tables, last is zero.
std::vector<ValueTable> PolicyValue(const KernelMixtureGame& game,
                                    const MarkovPolicy& pi,
                                    const MarkovPolicy& nu);

struct NashSolution {
  std::vector<ValueTable> values;  // H + 1 tables, last is zero.
  MarkovPolicy max_policy;
  MarkovPolicy min_policy;
};

NashSolution NashValue(const KernelMixtureGame& game);

// V_1^{*,nu}(x1) - V_1^{pi,*}(x1).
double DualityGap(const KernelMixtureGame& game, const MarkovPolicy& pi,
                  const MarkovPolicy& nu);

struct GameConfig {
  int n_states = 3;
  int n_actions = 2;
  int horizon = 3;
  int feature_dim = 6;
  double iota = 0.0;
  double dirichlet_alpha = 1.0;
  int initial_state = 0;
};

// Random instance satisfying every KernelMixtureGame invariant. Base kernels
// are Dirichlet rows, phi carries them scaled by 1/sqrt(d), and theta_h is
// sqrt(d) times a uniform simplex point, so B = sqrt(d).
KernelMixtureGame GenerateRandomGame(const GameConfig& config, Rng& rng);

// Text serialization, versioned "kmg-v1".
std::string SerializeGame(const KernelMixtureGame& game);
KernelMixtureGame DeserializeGame(const std::string& text);
void SaveGame(const KernelMixtureGame& game, const std::string& path);
KernelMixtureGame LoadGame(const std::string& path);

}  // namespace kmg

#endif  // KMG_GAME_H_
