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

#include "kmg/learner.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace kmg {
namespace {

constexpr int kSides = 2;

Eigen::VectorXd Clip(const Eigen::VectorXd& v, double h) {
  return v.cwiseMax(-h).cwiseMin(h);
}

PayoffMatrix StateSlice(const KernelMixtureGame& game, const Eigen::VectorXd& q,
                        int x) {
  const int n_a = game.n_actions();
  PayoffMatrix m(n_a, n_a);
  for (int a = 0; a < n_a; ++a) {
    for (int b = 0; b < n_a; ++b) m(a, b) = q(game.TupleIndex(x, a, b));
  }
  return m;
}

}  // namespace

void LearnerConfig::Validate() const {
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must be in (0, 1)");
  }
  if (!(beta_scale > 0.0)) throw std::invalid_argument("beta_scale must be > 0");
  if (!(iota >= 0.0)) throw std::invalid_argument("iota must be >= 0");
  if (gamma_mode == GammaMode::kFixed && !(gamma_fixed >= 0.0)) {
    throw std::invalid_argument("gamma_fixed must be >= 0");
  }
}

Learner::Learner(const KernelMixtureGame& game, LearnerConfig config)
    : game_(game), config_(config) {
  config_.Validate();
  const double b = game.param_bound();
  const double h = game.horizon();
  params_.param_bound = b;
  params_.horizon = game.horizon();
  params_.delta = config_.delta;
  params_.variant = config_.variant;
  params_.iota = config_.variant == Variant::kMisspecified ? config_.iota : 0.0;
  params_.beta_scale = config_.beta_scale;
  if (config_.lambda > 0.0) {
    params_.lambda = config_.lambda;
  } else if (config_.variant == Variant::kBernstein) {
    params_.lambda = 1.0 / (b * b);
  } else {
    params_.lambda = 1.0 + 1.0 / std::max(1, config_.episodes);
  }
  params_.lambda2 = h * h / (b * b);
  params_.alpha = h;
  params_.lambda1 = 1.0 / (b * b * h * h);
  params_.Validate();

  const int d = game.feature_dim();
  streams_.resize(game.horizon());
  for (auto& per_step : streams_) {
    per_step.resize(kSides);
    for (Stream& s : per_step) {
      if (config_.variant == Variant::kBernstein) {
        s.first = GramState(d, params_.lambda1);
        s.second = GramState(d, params_.lambda2);
        s.gain_first = GramState(d, params_.lambda);
        s.gain_second = GramState(d, params_.lambda);
      } else {
        s.first = GramState(d, params_.lambda);
      }
    }
  }
  if (config_.variant == Variant::kBernstein) RefreshBernsteinParams();
}

double Learner::GammaHat() const {
  if (config_.gamma_mode == GammaMode::kFixed) return config_.gamma_fixed;
  double best = 0.0;
  for (const auto& per_step : streams_) {
    for (const Stream& s : per_step) {
      const GramState& g =
          config_.variant == Variant::kBernstein ? s.gain_first : s.first;
      best = std::max(best, g.InformationGain());
    }
  }
  return best;
}

double Learner::MeanInformationGain() const {
  double total = 0.0;
  for (const auto& per_step : streams_) {
    for (const Stream& s : per_step) total += s.first.InformationGain();
  }
  return total / (kSides * game_.horizon());
}

// d_eff = max(gamma_hat, 1); alpha = H / sqrt(d_eff); lambda1 = d_eff/(B H)^2.
// Normalizers already recorded keep the alpha of their own episode.
void Learner::RefreshBernsteinParams() {
  const double b = params_.param_bound;
  const double h = params_.horizon;
  const double d_eff = std::max(1.0, GammaHat());
  params_.alpha = h / std::sqrt(d_eff);
  params_.lambda1 = d_eff / (b * b * h * h);
  for (auto& per_step : streams_) {
    for (Stream& s : per_step) s.first.SetLambda(params_.lambda1);
  }
}

const Plan& Learner::PlanEpisode() {
  const int t = episodes_done_ + 1;
  const int n_h = game_.horizon(), n_s = game_.n_states();
  const double h_max = game_.horizon();

  Plan plan;
  plan.episode = t;
  plan.q_upper.resize(n_h);
  plan.q_lower.resize(n_h);
  plan.sigma.assign(n_h, std::vector<JointDistribution>(n_s));
  plan.v_upper.assign(n_h + 1, ValueTable::Zero(n_s));
  plan.v_lower.assign(n_h + 1, ValueTable::Zero(n_s));

  if (config_.variant == Variant::kBernstein) {
    RefreshBernsteinParams();
    double gain_second = 0.0;
    for (const auto& per_step : streams_) {
      for (const Stream& s : per_step) {
        gain_second = std::max(gain_second, s.gain_second.InformationGain());
      }
    }
    plan.gamma_hat = GammaHat();
    if (config_.gamma_mode == GammaMode::kFixed) gain_second = plan.gamma_hat;
    const BernsteinBetas betas =
        BetaBernsteinSchedules(params_, plan.gamma_hat, gain_second, t);
    plan.beta = betas.beta;
    plan.beta1 = betas.beta1;
    plan.beta2 = betas.beta2;
  } else {
    plan.gamma_hat = GammaHat();
    plan.beta = config_.variant == Variant::kMisspecified
                    ? BetaMisspecified(params_, plan.gamma_hat, t)
                    : BetaHoeffding(params_, plan.gamma_hat);
  }
  plan.alpha = params_.alpha;

  Eigen::VectorXd means, widths;
  for (int h = n_h - 1; h >= 0; --h) {
    const Eigen::MatrixXd phi_upper = PhiVAll(game_, plan.v_upper[h + 1]);
    const Eigen::MatrixXd phi_lower = PhiVAll(game_, plan.v_lower[h + 1]);

    plan.clip_count += stream(h, Player::kMax).first.Predict(phi_upper, &means, &widths);
    plan.q_upper[h] = Clip(game_.rewards(h) + means + plan.beta * widths, h_max);
    plan.clip_count += stream(h, Player::kMin).first.Predict(phi_lower, &means, &widths);
    plan.q_lower[h] = Clip(game_.rewards(h) + means - plan.beta * widths, h_max);

    for (int x = 0; x < n_s; ++x) {
      const PayoffMatrix upper = StateSlice(game_, plan.q_upper[h], x);
      const PayoffMatrix lower = StateSlice(game_, plan.q_lower[h], x);
      int pivots = 0;
      try {
        plan.sigma[h][x] = FindCce(upper, lower, CceOptions{}, &pivots);
      } catch (const CceError& e) {
        throw LearnerError("plan t=" + std::to_string(t) +
                           " h=" + std::to_string(h + 1) +
                           " x=" + std::to_string(x) + ": " + e.what());
      }
      plan.lp_pivots += pivots;
      plan.v_upper[h](x) = plan.sigma[h][x].Expectation(upper);
      plan.v_lower[h](x) = plan.sigma[h][x].Expectation(lower);
    }
  }
  plan_ = std::move(plan);
  has_plan_ = true;
  return plan_;
}

Trajectory Learner::ExecuteEpisode(Rng& rng) const {
  if (!has_plan_) throw LearnerError("ExecuteEpisode called without a plan");
  const int n_a = game_.n_actions();
  Trajectory traj;
  traj.episode = plan_.episode;
  int x = game_.initial_state();
  Eigen::VectorXd joint(n_a * n_a);
  for (int h = 0; h < game_.horizon(); ++h) {
    const Eigen::MatrixXd& sigma = plan_.sigma[h][x].probs();
    for (int a = 0; a < n_a; ++a) {
      for (int b = 0; b < n_a; ++b) joint(a * n_a + b) = sigma(a, b);
    }
    const int pick = SampleIndex(rng, joint);
    Step step;
    step.state = x;
    step.max_action = pick / n_a;
    step.min_action = pick % n_a;
    const int z = game_.TupleIndex(x, step.max_action, step.min_action);
    step.reward = game_.reward(h, z);
    step.next_state = SampleNextState(rng, game_, h, z);
    traj.steps.push_back(step);
    x = step.next_state;
  }
  return traj;
}

void Learner::UpdateModels(const Trajectory& trajectory) {
  if (!has_plan_ || trajectory.episode != plan_.episode) {
    throw LearnerError("UpdateModels: trajectory does not match the plan");
  }
  if (static_cast<int>(trajectory.steps.size()) != game_.horizon()) {
    throw LearnerError("UpdateModels: trajectory length != horizon");
  }
  const bool bernstein = config_.variant == Variant::kBernstein;
  BernsteinBetas betas{plan_.beta, plan_.beta1, plan_.beta2};
  for (int h = 0; h < game_.horizon(); ++h) {
    const Step& step = trajectory.steps[h];
    const int z = game_.TupleIndex(step.state, step.max_action, step.min_action);
    for (int side = 0; side < kSides; ++side) {
      const ValueTable& next =
          side == 0 ? plan_.v_upper[h + 1] : plan_.v_lower[h + 1];
      const double target = next(step.next_state);
      if (!std::isfinite(target)) {
        throw LearnerError("UpdateModels: non-finite regression target");
      }
      const FeatureVector phi = PhiV(game_, z, next);
      Stream& s = streams_[h][side];
      if (!bernstein) {
        s.first.Append(phi, target, 1.0);
        continue;
      }
      const ValueTable next_sq = next.cwiseProduct(next);
      const FeatureVector phi_sq = PhiV(game_, z, next_sq);
      const VarianceEstimate est =
          EstimateVariance(s.first, s.second, phi, phi_sq, betas, params_);
      const Eigen::VectorXd p = game_.transitions(h).row(z).transpose();
      const double mean = p.dot(next);
      VarianceSample sample;
      sample.episode = trajectory.episode;
      sample.step = h + 1;
      sample.side = static_cast<Player>(side);
      sample.r_squared = est.r_squared;
      sample.true_variance = std::max(0.0, p.dot(next_sq) - mean * mean);
      variance_samples_.push_back(sample);

      s.first.Append(phi, target, std::sqrt(est.r_squared));
      s.second.Append(phi_sq, target * target, 1.0);
      s.gain_first.Append(phi, target, 1.0);
      s.gain_second.Append(phi_sq, target * target, 1.0);
    }
  }
  ++episodes_done_;
}

std::pair<MarkovPolicy, MarkovPolicy> Learner::ExtractPolicies() const {
  if (!has_plan_) throw LearnerError("ExtractPolicies called without a plan");
  const int n_h = game_.horizon(), n_s = game_.n_states(), n_a = game_.n_actions();
  MarkovPolicy pi, nu;
  pi.probs.assign(n_h, Eigen::MatrixXd(n_s, n_a));
  nu.probs.assign(n_h, Eigen::MatrixXd(n_s, n_a));
  for (int h = 0; h < n_h; ++h) {
    for (int x = 0; x < n_s; ++x) {
      pi.probs[h].row(x) = plan_.sigma[h][x].row_marginal().transpose();
      nu.probs[h].row(x) = plan_.sigma[h][x].col_marginal().transpose();
    }
  }
  return {std::move(pi), std::move(nu)};
}

std::optional<int> SelectT0(const std::vector<EpisodeRecord>& episodes) {
  if (episodes.empty()) return std::nullopt;
  size_t best = 0;
  for (size_t i = 1; i < episodes.size(); ++i) {
    const double gap = episodes[i].vbar1 - episodes[i].vlow1;
    if (gap < episodes[best].vbar1 - episodes[best].vlow1) best = i;
  }
  return episodes[best].episode;
}

namespace {

std::vector<StreamSummary> SummarizeStreams(const Learner& learner, int horizon) {
  std::vector<StreamSummary> out;
  for (int h = 0; h < horizon; ++h) {
    for (Player side : {Player::kMax, Player::kMin}) {
      const GramState& g = learner.stream(h, side).first;
      StreamSummary s;
      s.step = h + 1;
      s.side = side;
      s.entries = g.size();
      s.potential_sum = g.potential_sum();
      s.log_det = 2.0 * g.InformationGain();
      s.dual_residual = g.DualResidual();
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace

RunResult Run(const KernelMixtureGame& game, const LearnerConfig& config,
              std::uint64_t seed) {
  Learner learner(game, config);
  Rng rng(seed);
  RunResult result;
  const int x1 = game.initial_state();
  double cumulative = 0.0;
  try {
    for (int t = 1; t <= config.episodes; ++t) {
      const Plan& plan = learner.PlanEpisode();
      const auto [pi, nu] = learner.ExtractPolicies();
      const Trajectory traj = learner.ExecuteEpisode(rng);

      EpisodeRecord rec;
      rec.episode = t;
      rec.best_response_max =
          BestResponseValue(game, nu, Player::kMax).values[0](x1);
      rec.best_response_min =
          BestResponseValue(game, pi, Player::kMin).values[0](x1);
      rec.duality_gap = rec.best_response_max - rec.best_response_min;
      cumulative += rec.duality_gap;
      rec.cum_regret = cumulative;
      rec.vbar1 = plan.v_upper[0](x1);
      rec.vlow1 = plan.v_lower[0](x1);
      rec.beta = plan.beta;
      rec.info_gain_mean = learner.MeanInformationGain();
      rec.clip_count = plan.clip_count;
      rec.lp_pivots = plan.lp_pivots;
      result.episodes.push_back(rec);

      learner.UpdateModels(traj);
    }
  } catch (const std::exception& e) {
    result.t0 = SelectT0(result.episodes);
    result.variance_samples = learner.variance_samples();
    throw RunAborted(e.what(), std::move(result));
  }
  result.t0 = SelectT0(result.episodes);
  result.variance_samples = learner.variance_samples();
  result.streams = SummarizeStreams(learner, game.horizon());
  return result;
}

}  // namespace kmg
