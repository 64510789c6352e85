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

#ifndef KMG_LEARNER_H_
#define KMG_LEARNER_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmg/equilibrium.h"
#include "kmg/game.h"
#include "kmg/kernels.h"

namespace kmg {

// How the information gain entering beta is obtained: the realized gain of
// the current Gram matrices, or a fixed value from a pilot run.
enum class GammaMode { kAdaptive, kFixed };

struct LearnerConfig {
  Variant variant = Variant::kHoeffding;
  int episodes = 0;
  double delta = 0.05;
  double beta_scale = 1.0;
  // Ridge parameter; <= 0 selects 1 + 1/T (hoeffding, misspecified) or 1/B^2
  // (bernstein).
  double lambda = 0.0;
  GammaMode gamma_mode = GammaMode::kAdaptive;
  double gamma_fixed = 0.0;
  // Misspecification level assumed by the enlarged beta.
  double iota = 0.0;

  void Validate() const;
};

// Optimistic/pessimistic plan of one episode. Tables over tuples are indexed
// by KernelMixtureGame::TupleIndex.
struct Plan {
  int episode = 0;
  std::vector<Eigen::VectorXd> q_upper;  // [h](z), clipped to [-H, H]
  std::vector<Eigen::VectorXd> q_lower;
  std::vector<std::vector<JointDistribution>> sigma;  // [h][x]
  std::vector<ValueTable> v_upper;  // H + 1 tables, last is zero
  std::vector<ValueTable> v_lower;
  double beta = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double alpha = 0.0;
  double gamma_hat = 0.0;
  int clip_count = 0;
  int lp_pivots = 0;
};

class LearnerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VarianceSample {
  int episode = 0;
  int step = 0;
  Player side = Player::kMax;
  double r_squared = 0.0;
  double true_variance = 0.0;
};

// One (player, step) regression stream. `first` drives the Q update;
// bernstein mode adds the second-moment regression and two unweighted
// trackers at lambda = 1/B^2 used only for information-gain estimates.
struct Stream {
  GramState first;
  GramState second;
  GramState gain_first;
  GramState gain_second;
};

// KernelCCE-VTR and its Bernstein and misspecified variants.
class Learner {
 public:
  Learner(const KernelMixtureGame& game, LearnerConfig config);

  // Plans episode t = episodes_done() + 1 from the data of episodes 1..t-1.
  const Plan& PlanEpisode();

  // Samples one episode from the resident plan.
  Trajectory ExecuteEpisode(Rng& rng) const;

  // Appends the trajectory's regression data; the plan that produced it must
  // still be resident.
  void UpdateModels(const Trajectory& trajectory);

  // Marginal policies of the resident plan: (row marginals, column marginals).
  std::pair<MarkovPolicy, MarkovPolicy> ExtractPolicies() const;

  const Plan& plan() const { return plan_; }
  bool has_plan() const { return has_plan_; }
  int episodes_done() const { return episodes_done_; }
  const BonusParams& params() const { return params_; }
  const LearnerConfig& config() const { return config_; }
  const Stream& stream(int h, Player side) const {
    return streams_[h][static_cast<int>(side)];
  }
  Stream& mutable_stream(int h, Player side) {
    return streams_[h][static_cast<int>(side)];
  }
  // Variance checks gathered by UpdateModels in bernstein mode.
  const std::vector<VarianceSample>& variance_samples() const {
    return variance_samples_;
  }
  // Mean information gain of the Q-driving streams.
  double MeanInformationGain() const;

 private:
  void RefreshBernsteinParams();
  double GammaHat() const;

  const KernelMixtureGame& game_;
  LearnerConfig config_;
  BonusParams params_;
  std::vector<std::vector<Stream>> streams_;  // [h][side]
  Plan plan_;
  bool has_plan_ = false;
  int episodes_done_ = 0;
  std::vector<VarianceSample> variance_samples_;
};

struct EpisodeRecord {
  int episode = 0;
  double duality_gap = 0.0;
  double cum_regret = 0.0;
  double vbar1 = 0.0;
  double vlow1 = 0.0;
  double beta = 0.0;
  double info_gain_mean = 0.0;
  int clip_count = 0;
  // Exact best-response values V^{*,nu}(x1) and V^{pi,*}(x1).
  double best_response_max = 0.0;
  double best_response_min = 0.0;
  int lp_pivots = 0;
};

struct StreamSummary {
  int step = 0;
  Player side = Player::kMax;
  int entries = 0;
  double potential_sum = 0.0;  // sum of min{1, w_t^2}
  double log_det = 0.0;        // logdet(I + K_T / lambda)
  double dual_residual = 0.0;
};

struct RunResult {
  std::vector<EpisodeRecord> episodes;
  std::optional<int> t0;
  std::vector<VarianceSample> variance_samples;
  std::vector<StreamSummary> streams;
};

// Raised by Run on an internal error; carries the episodes completed so far.
class RunAborted : public LearnerError {
 public:
  RunAborted(const std::string& what, RunResult partial)
      : LearnerError(what), partial_(std::move(partial)) {}
  const RunResult& partial() const { return partial_; }

 private:
  RunResult partial_;
};

// Optimism of episode t's plan against the exact best responses.
inline bool OptimismHolds(const EpisodeRecord& r, double tol = 1e-6) {
  return r.vbar1 >= r.best_response_max - tol &&
         r.vlow1 <= r.best_response_min + tol;
}

// argmin_t {vbar1 - vlow1}, smallest t on ties; empty record gives nullopt.
std::optional<int> SelectT0(const std::vector<EpisodeRecord>& episodes);

// plan -> extract -> execute -> evaluate -> update for t = 1..T. Throws
// RunAborted on any internal error.
RunResult Run(const KernelMixtureGame& game, const LearnerConfig& config,
              std::uint64_t seed);

}  // namespace kmg

#endif  // KMG_LEARNER_H_
