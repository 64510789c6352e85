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

#include <cmath>

#include "doctest.h"
#include "kmg/learner.h"
#include "test_util.h"

namespace kmg {
namespace {

KernelMixtureGame RandomGame(std::uint64_t seed, GameConfig config = {}) {
  Rng rng(seed);
  return GenerateRandomGame(config, rng);
}

LearnerConfig Config(Variant variant, int episodes, double beta_scale = 1.0) {
  LearnerConfig c;
  c.variant = variant;
  c.episodes = episodes;
  c.beta_scale = beta_scale;
  return c;
}

// Q^{*,nu}_h(z) = r_h(z) + sum_x' P_h(x'|z) V^{*,nu}_{h+1}(x').
std::vector<Eigen::VectorXd> BestResponseQ(const KernelMixtureGame& game,
                                           const MarkovPolicy& nu) {
  const BestResponse br = BestResponseValue(game, nu, Player::kMax);
  std::vector<Eigen::VectorXd> q;
  for (int h = 0; h < game.horizon(); ++h) {
    q.push_back(game.rewards(h) + game.transitions(h) * br.values[h + 1]);
  }
  return q;
}

void CheckPlanInvariants(const KernelMixtureGame& game, const Plan& plan) {
  const double h_max = game.horizon();
  const int n_a = game.n_actions();
  CHECK(plan.v_upper.back().cwiseAbs().maxCoeff() == 0.0);
  CHECK(plan.v_lower.back().cwiseAbs().maxCoeff() == 0.0);
  for (int h = 0; h < game.horizon(); ++h) {
    CHECK(plan.q_upper[h].cwiseAbs().maxCoeff() <= h_max);
    CHECK(plan.q_lower[h].cwiseAbs().maxCoeff() <= h_max);
    for (int x = 0; x < game.n_states(); ++x) {
      const Eigen::MatrixXd& s = plan.sigma[h][x].probs();
      double up = 0.0, low = 0.0;
      for (int a = 0; a < n_a; ++a) {
        for (int b = 0; b < n_a; ++b) {
          up += s(a, b) * plan.q_upper[h](game.TupleIndex(x, a, b));
          low += s(a, b) * plan.q_lower[h](game.TupleIndex(x, a, b));
        }
      }
      CHECK(std::abs(plan.v_upper[h](x) - up) <= 1e-12);
      CHECK(std::abs(plan.v_lower[h](x) - low) <= 1e-12);
    }
  }
}

TEST_CASE("first plan uses the empty-Gram closed form") {
  const KernelMixtureGame game = RandomGame(1);
  Learner learner(game, Config(Variant::kHoeffding, 100));
  const Plan& plan = learner.PlanEpisode();
  const double lambda = 1.0 + 1.0 / 100;
  CHECK(learner.params().lambda == doctest::Approx(lambda));
  CHECK(plan.beta == doctest::Approx(BetaHoeffding(learner.params(), 0.0)));
  for (int h = 0; h < game.horizon(); ++h) {
    for (int z = 0; z < game.n_tuples(); ++z) {
      const double w_up = PhiV(game, z, plan.v_upper[h + 1]).norm() / std::sqrt(lambda);
      const double w_low = PhiV(game, z, plan.v_lower[h + 1]).norm() / std::sqrt(lambda);
      const double up = std::clamp(game.reward(h, z) + plan.beta * w_up, -3.0, 3.0);
      const double low = std::clamp(game.reward(h, z) - plan.beta * w_low, -3.0, 3.0);
      CHECK(plan.q_upper[h](z) == doctest::Approx(up).epsilon(1e-12));
      CHECK(plan.q_lower[h](z) == doctest::Approx(low).epsilon(1e-12));
    }
  }
  CheckPlanInvariants(game, plan);
}

TEST_CASE("unit reward with a large bonus clips to H") {
  KernelMixtureGame base = RandomGame(2);
  std::vector<Eigen::VectorXd> reward(3, Eigen::VectorXd::Ones(base.n_tuples()));
  std::vector<Eigen::MatrixXd> features;
  std::vector<Eigen::VectorXd> theta;
  for (int z = 0; z < base.n_tuples(); ++z) features.push_back(base.features(z));
  for (int h = 0; h < 3; ++h) theta.push_back(base.theta(h));
  const KernelMixtureGame game(3, 2, 3, 6, reward, features, theta, base.param_bound());
  Learner learner(game, Config(Variant::kHoeffding, 10));
  const Plan& plan = learner.PlanEpisode();
  for (int h = 0; h < 2; ++h) CHECK(plan.q_upper[h].minCoeff() == 3.0);
  CHECK(plan.q_upper[2].maxCoeff() == 1.0);  // last step has no bonus
}

TEST_CASE("optimism on a d = 1 game") {
  GameConfig c;
  c.feature_dim = 1;
  const KernelMixtureGame game = RandomGame(3, c);
  Learner learner(game, Config(Variant::kHoeffding, 200));
  Rng rng(3);
  for (int t = 1; t <= 200; ++t) {
    const Plan& plan = learner.PlanEpisode();
    const auto [pi, nu] = learner.ExtractPolicies();
    const std::vector<Eigen::VectorXd> q = BestResponseQ(game, nu);
    for (int h = 0; h < game.horizon(); ++h) {
      CHECK((plan.q_upper[h] - q[h]).minCoeff() >= -1e-9);
    }
    learner.UpdateModels(learner.ExecuteEpisode(rng));
  }
}

TEST_CASE("execution") {
  SUBCASE("point-mass plan on deterministic transitions") {
    // Step 0 rewards row 1 strictly, so the CCE is a point mass there.
    Eigen::VectorXd r0(8), r1 = Eigen::VectorXd::Zero(8);
    r0 << 0, 0, 1, 1, 0, 0, 1, 1;  // r(x, a, b) = a
    const KernelMixtureGame game =
        testing::DeterministicGame(2, 2, {1, 0}, {r0, r1});
    Learner learner(game, Config(Variant::kHoeffding, 5));
    learner.PlanEpisode();
    Rng a(1), b(999);
    const Trajectory ta = learner.ExecuteEpisode(a), tb = learner.ExecuteEpisode(b);
    CHECK(ta.steps[0].max_action == 1);
    CHECK(ta.steps[0].next_state == 1);
    CHECK(ta.steps[1].state == 1);
    CHECK(ta.steps[1].next_state == 0);
    CHECK(ta.steps[0].max_action == tb.steps[0].max_action);
  }
  SUBCASE("same seed, same trajectory") {
    const KernelMixtureGame game = RandomGame(4);
    Learner learner(game, Config(Variant::kHoeffding, 5));
    learner.PlanEpisode();
    Rng a(42), b(42);
    for (int k = 0; k < 20; ++k) {
      const Trajectory ta = learner.ExecuteEpisode(a), tb = learner.ExecuteEpisode(b);
      for (int h = 0; h < 3; ++h) {
        CHECK(ta.steps[h].state == tb.steps[h].state);
        CHECK(ta.steps[h].max_action == tb.steps[h].max_action);
        CHECK(ta.steps[h].min_action == tb.steps[h].min_action);
        CHECK(ta.steps[h].next_state == tb.steps[h].next_state);
      }
    }
  }
  SUBCASE("action frequencies match sigma") {
    const KernelMixtureGame game = RandomGame(5);
    Learner learner(game, Config(Variant::kHoeffding, 50, 0.2));
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      learner.PlanEpisode();
      learner.UpdateModels(learner.ExecuteEpisode(rng));
    }
    const Plan& plan = learner.PlanEpisode();
    const Eigen::MatrixXd& sigma = plan.sigma[0][game.initial_state()].probs();
    const int n = 20000;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(2, 2);
    for (int e = 0; e < n; ++e) {
      const Step s = learner.ExecuteEpisode(rng).steps[0];
      counts(s.max_action, s.min_action) += 1.0;
    }
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double p = sigma(a, b);
        CHECK(std::abs(counts(a, b) - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)) + 1e-9);
      }
    }
  }
}

TEST_CASE("model updates") {
  SUBCASE("H = 1 leaves every regression at zero") {
    GameConfig c;
    c.horizon = 1;
    const KernelMixtureGame game = RandomGame(6, c);
    Learner learner(game, Config(Variant::kHoeffding, 10));
    Rng rng(6);
    for (int t = 0; t < 10; ++t) {
      learner.PlanEpisode();
      learner.UpdateModels(learner.ExecuteEpisode(rng));
    }
    const GramState& g = learner.stream(0, Player::kMax).first;
    CHECK(g.size() == 10);
    for (int p = 0; p < g.size(); ++p) {
      CHECK(g.feature(p).norm() == 0.0);
      CHECK(g.target(p) == 0.0);
    }
    CHECK(g.Mean(FeatureVector::Ones(6)) == 0.0);
  }
  SUBCASE("entry counts and bit-exact targets") {
    const KernelMixtureGame game = RandomGame(7);
    Learner learner(game, Config(Variant::kHoeffding, 30));
    Rng rng(7);
    for (int t = 1; t <= 30; ++t) {
      const Plan plan = learner.PlanEpisode();
      const Trajectory traj = learner.ExecuteEpisode(rng);
      learner.UpdateModels(traj);
      for (int h = 0; h < 3; ++h) {
        const GramState& up = learner.stream(h, Player::kMax).first;
        const GramState& low = learner.stream(h, Player::kMin).first;
        CHECK(up.size() == t);
        CHECK(low.size() == t);
        const int x_next = traj.steps[h].next_state;
        CHECK(up.target(t - 1) == plan.v_upper[h + 1](x_next));
        CHECK(low.target(t - 1) == plan.v_lower[h + 1](x_next));
        const int z = game.TupleIndex(traj.steps[h].state, traj.steps[h].max_action,
                                      traj.steps[h].min_action);
        CHECK(up.feature(t - 1) == PhiV(game, z, plan.v_upper[h + 1]));
      }
    }
  }
  SUBCASE("mismatched trajectory is rejected") {
    const KernelMixtureGame game = RandomGame(8);
    Learner learner(game, Config(Variant::kHoeffding, 5));
    Rng rng(8);
    CHECK_THROWS_AS(learner.ExecuteEpisode(rng), LearnerError);
    learner.PlanEpisode();
    Trajectory traj = learner.ExecuteEpisode(rng);
    traj.episode = 7;
    CHECK_THROWS_AS(learner.UpdateModels(traj), LearnerError);
    traj.episode = 1;
    traj.steps.pop_back();
    CHECK_THROWS_AS(learner.UpdateModels(traj), LearnerError);
  }
}

TEST_CASE("policy extraction") {
  Eigen::MatrixXd payoff(2, 2);
  payoff << 2, 2, 0, 0;
  const KernelMixtureGame game = testing::MatrixGame(payoff);
  Learner learner(game, Config(Variant::kHoeffding, 1));
  const Plan& plan = learner.PlanEpisode();
  const auto [pi, nu] = learner.ExtractPolicies();
  CHECK(std::abs(pi.probs[0](0, 0) - 1.0) <= 1e-8);
  CHECK(std::abs(pi.probs[0](0, 1)) <= 1e-8);
  CHECK((nu.probs[0].row(0).transpose() - plan.sigma[0][0].col_marginal()).norm() == 0.0);
  CHECK_NOTHROW(pi.Validate(1e-12));
  CHECK_NOTHROW(nu.Validate(1e-12));

  const KernelMixtureGame random = RandomGame(9);
  Learner other(random, Config(Variant::kHoeffding, 3));
  other.PlanEpisode();
  const auto [pi2, nu2] = other.ExtractPolicies();
  for (int h = 0; h < 3; ++h) {
    for (int x = 0; x < 3; ++x) {
      const Eigen::MatrixXd& s = other.plan().sigma[h][x].probs();
      CHECK((pi2.probs[h].row(x).transpose() - s.rowwise().sum()).norm() <= 1e-15);
      CHECK((nu2.probs[h].row(x) - s.colwise().sum()).norm() <= 1e-15);
    }
  }
}

TEST_CASE("t0 selection") {
  auto rec = [](int t, double width) {
    EpisodeRecord r;
    r.episode = t;
    r.vbar1 = width;
    return r;
  };
  CHECK(!SelectT0({}).has_value());
  CHECK(SelectT0({rec(1, 5.0)}) == 1);
  CHECK(SelectT0({rec(1, 3.0), rec(2, 1.0), rec(3, 2.0)}) == 2);
  CHECK(SelectT0({rec(1, 3.0), rec(2, 1.0), rec(3, 1.0)}) == 2);
}

TEST_CASE("run") {
  SUBCASE("T = 0") {
    const RunResult r = Run(RandomGame(10), Config(Variant::kHoeffding, 0), 1);
    CHECK(r.episodes.empty());
    CHECK(!r.t0.has_value());
  }
  SUBCASE("single action gives zero gap") {
    const KernelMixtureGame game =
        testing::MatrixGame(Eigen::MatrixXd::Constant(1, 1, 0.3), 2);
    const RunResult r = Run(game, Config(Variant::kHoeffding, 20), 1);
    for (const EpisodeRecord& e : r.episodes) CHECK(std::abs(e.duality_gap) <= 1e-12);
  }
  SUBCASE("record invariants and determinism") {
    const KernelMixtureGame game = RandomGame(11);
    for (Variant v : {Variant::kHoeffding, Variant::kBernstein, Variant::kMisspecified}) {
      LearnerConfig c = Config(v, 40, 0.3);
      c.iota = 0.05;
      const RunResult a = Run(game, c, 5), b = Run(game, c, 5);
      REQUIRE(a.episodes.size() == 40);
      double prefix = 0.0;
      for (size_t i = 0; i < a.episodes.size(); ++i) {
        const EpisodeRecord& e = a.episodes[i];
        CHECK(e.episode == static_cast<int>(i) + 1);
        CHECK(e.duality_gap >= -1e-9);
        prefix += e.duality_gap;
        CHECK(e.cum_regret == prefix);
        if (OptimismHolds(e)) CHECK(e.duality_gap <= e.vbar1 - e.vlow1 + 1e-9);
        CHECK(e.duality_gap == b.episodes[i].duality_gap);
        CHECK(e.vbar1 == b.episodes[i].vbar1);
        CHECK(e.beta == b.episodes[i].beta);
      }
      CHECK(a.t0 == SelectT0(a.episodes));
      CHECK(a.streams.size() == 6);
      for (const StreamSummary& s : a.streams) {
        CHECK(s.entries == 40);
        CHECK(s.potential_sum <= 2.0 * s.log_det + 1e-9);
      }
      if (v == Variant::kBernstein) {
        CHECK(a.variance_samples.size() == 40 * 6);
      } else {
        CHECK(a.variance_samples.empty());
      }
    }
  }
}

TEST_CASE("plans keep their invariants across variants") {
  const KernelMixtureGame game = RandomGame(12);
  for (Variant v : {Variant::kHoeffding, Variant::kBernstein, Variant::kMisspecified}) {
    Learner learner(game, Config(v, 30, 0.5));
    Rng rng(12);
    for (int t = 0; t < 30; ++t) {
      CheckPlanInvariants(game, learner.PlanEpisode());
      learner.UpdateModels(learner.ExecuteEpisode(rng));
    }
  }
}

TEST_CASE("bernstein parameters") {
  const KernelMixtureGame game = RandomGame(13);
  Learner learner(game, Config(Variant::kBernstein, 50));
  const double b = game.param_bound(), h = 3.0;
  CHECK(learner.params().lambda == doctest::Approx(1.0 / (b * b)));
  CHECK(learner.params().lambda2 == doctest::Approx(h * h / (b * b)));
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    const Plan& plan = learner.PlanEpisode();
    const double d_eff = std::max(1.0, plan.gamma_hat);
    CHECK(plan.alpha == doctest::Approx(h / std::sqrt(d_eff)));
    CHECK(learner.params().lambda1 == doctest::Approx(d_eff / (b * b * h * h)));
    // lambda1 alpha^2 = 1/B^2: the tracker gain is the gain at that ridge.
    CHECK(learner.params().lambda1 * plan.alpha * plan.alpha == doctest::Approx(1.0 / (b * b)));
    learner.UpdateModels(learner.ExecuteEpisode(rng));
  }
  for (const VarianceSample& s : learner.variance_samples()) {
    CHECK(s.r_squared > 0.0);
    CHECK(s.true_variance >= 0.0);
  }
}

TEST_CASE("fixed gamma mode") {
  const KernelMixtureGame game = RandomGame(14);
  LearnerConfig c = Config(Variant::kHoeffding, 10);
  c.gamma_mode = GammaMode::kFixed;
  c.gamma_fixed = 4.0;
  Learner learner(game, c);
  const Plan& plan = learner.PlanEpisode();
  CHECK(plan.beta == doctest::Approx(BetaHoeffding(learner.params(), 4.0)));
}

TEST_CASE("config validation") {
  LearnerConfig c;
  c.episodes = -1;
  CHECK_THROWS(c.Validate());
  c = LearnerConfig{};
  c.delta = 0.0;
  CHECK_THROWS(c.Validate());
  c = LearnerConfig{};
  c.beta_scale = 0.0;
  CHECK_THROWS(c.Validate());
}

}  // namespace
}  // namespace kmg
