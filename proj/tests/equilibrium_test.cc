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
#include "kmg/equilibrium.h"
#include "test_util.h"

namespace kmg {
namespace {

// Deviation gains written out entry by entry.
double NaiveViolation(const PayoffMatrix& q1, const PayoffMatrix& q2,
                      const Eigen::MatrixXd& s) {
  const int n = static_cast<int>(s.rows()), m = static_cast<int>(s.cols());
  double e1 = 0, e2 = 0, worst = -1e300;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      e1 += s(i, j) * q1(i, j);
      e2 += s(i, j) * q2(i, j);
    }
  }
  for (int a = 0; a < n; ++a) {
    double dev = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) dev += s(i, j) * q1(a, j);
    }
    worst = std::max(worst, dev - e1);
  }
  for (int b = 0; b < m; ++b) {
    double dev = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) dev += s(i, j) * q2(i, b);
    }
    worst = std::max(worst, e2 - dev);
  }
  return worst;
}

TEST_CASE("cce examples") {
  SUBCASE("matching pennies") {
    PayoffMatrix q(2, 2);
    q << 1, -1, -1, 1;
    const JointDistribution s = FindCce(q, q);
    CHECK(NaiveViolation(q, q, s.probs()) <= 1e-8);
    CHECK(NaiveViolation(q, q, Eigen::MatrixXd::Constant(2, 2, 0.25)) <= 1e-15);
  }
  SUBCASE("constant payoff") {
    const PayoffMatrix q = PayoffMatrix::Constant(3, 3, 0.7);
    const JointDistribution s = FindCce(q, q);
    CHECK(std::abs(s.probs().sum() - 1.0) <= 1e-9);
    CHECK(s.probs().minCoeff() >= 0.0);
  }
  SUBCASE("dominant row") {
    PayoffMatrix q(2, 2);
    q << 2, 2, 0, 0;
    const JointDistribution s = FindCce(q, q);
    CHECK(std::abs(s.row_marginal()(0) - 1.0) <= 1e-8);
    CHECK(std::abs(s.row_marginal()(1)) <= 1e-8);
  }
}

TEST_CASE("grid oracle: every feasible sigma of the dominant-row game has row marginal (1, 0)") {
  PayoffMatrix q(2, 2);
  q << 2, 2, 0, 0;
  const int n = 1000;
  long feasible = 0;
  double worst_row1 = 0.0;
  Eigen::MatrixXd s(2, 2);
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      for (int k = 0; i + j + k <= n; ++k) {
        s << i, j, k, n - i - j - k;
        s /= n;
        if (NaiveViolation(q, q, s) <= 1e-12) {
          ++feasible;
          worst_row1 = std::max(worst_row1, s(1, 0) + s(1, 1));
        }
      }
    }
  }
  CHECK(feasible > 0);
  CHECK(worst_row1 == 0.0);
}

TEST_CASE("cce violation agrees with the naive loops") {
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const PayoffMatrix q1 = testing::RandomMatrix(rng, 4, 4, 3.0);
    const PayoffMatrix q2 = testing::RandomMatrix(rng, 4, 4, 3.0);
    Eigen::MatrixXd s = testing::RandomMatrix(rng, 4, 4, 1.0).cwiseAbs();
    s /= s.sum();
    CHECK(CceViolation(q1, q2, s) == doctest::Approx(NaiveViolation(q1, q2, s)).epsilon(1e-12));
  }
}

TEST_CASE("random cce instances are feasible, scale invariant and deterministic") {
  Rng rng(7);
  std::uniform_int_distribution<int> pick(2, 8);
  for (int k = 0; k < 300; ++k) {
    const int n = pick(rng);
    const PayoffMatrix q1 = testing::RandomMatrix(rng, n, n, 3.0);
    const PayoffMatrix q2 = testing::RandomMatrix(rng, n, n, 3.0);
    int pivots = 0;
    const JointDistribution s = FindCce(q1, q2, {}, &pivots);
    CHECK(NaiveViolation(q1, q2, s.probs()) <= 1e-8);
    CHECK(std::abs(s.probs().sum() - 1.0) <= 1e-9);
    CHECK(s.probs().minCoeff() >= 0.0);
    CHECK(NaiveViolation(2.5 * q1, 2.5 * q2, s.probs()) <= 2.5e-8);
    int again = 0;
    CHECK(FindCce(q1, q2, {}, &again).probs() == s.probs());
    CHECK(again == pivots);
    CHECK((s.row_marginal() - s.probs().rowwise().sum()).norm() == 0.0);
    CHECK((s.col_marginal() - s.probs().colwise().sum().transpose()).norm() == 0.0);
  }
}

TEST_CASE("near-tied payoffs") {
  PayoffMatrix q1(2, 2), q2(2, 2);
  q1 << 2.8719907299745295, 2.7788514227180503, 2.913971081057968, 2.7788337143539068;
  q2 << -0.75104063538735799, -0.79197871475588644, -1.5600512308810037,
      -1.5682525687120488;
  CHECK(NaiveViolation(q1, q2, FindCce(q1, q2).probs()) <= 1e-8);

  // Copies of a few base values plus offsets from 1e-2 down to exact ties.
  Rng rng(17);
  std::uniform_int_distribution<int> pick(2, 8), base(0, 2);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double levels[] = {-1.3, 0.4, 2.7};
  const double offsets[] = {1e-2, 1e-5, 1e-8, 1e-12, 0.0};
  for (int k = 0; k < 5000; ++k) {
    const int n = pick(rng);
    const double offset = offsets[k % 5];
    PayoffMatrix a(n, n), b(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        a(i, j) = levels[base(rng)] + offset * unit(rng);
        b(i, j) = levels[base(rng)] + offset * unit(rng);
      }
    }
    const JointDistribution s = FindCce(a, b);
    CHECK(NaiveViolation(a, b, s.probs()) <= 1e-8);
  }
}

TEST_CASE("maximize-gap objective") {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const PayoffMatrix q2 = testing::RandomMatrix(rng, 3, 3, 1.0);
    const PayoffMatrix q1 = q2 + testing::RandomMatrix(rng, 3, 3, 1.0).cwiseAbs();
    CceOptions options;
    options.maximize_gap = true;
    const JointDistribution best = FindCce(q1, q2, options);
    const JointDistribution plain = FindCce(q1, q2);
    CHECK(NaiveViolation(q1, q2, best.probs()) <= 1e-8);
    CHECK(best.Expectation(q1 - q2) >= plain.Expectation(q1 - q2) - 1e-9);
  }
}

TEST_CASE("joint distribution validation") {
  Eigen::MatrixXd s(2, 2);
  s << 0.5, 0.5, -5e-11, 0.0;
  const JointDistribution d(s);
  CHECK(d.probs().minCoeff() == 0.0);
  s(1, 0) = -1e-6;
  CHECK_THROWS_AS(JointDistribution{s}, std::invalid_argument);
  CHECK_THROWS_AS(JointDistribution{Eigen::MatrixXd::Constant(2, 2, 0.3)},
                  std::invalid_argument);

  const JointDistribution u = JointDistribution(Eigen::MatrixXd::Constant(3, 3, 1.0 / 9));
  CHECK((u.row_marginal() - Eigen::VectorXd::Constant(3, 1.0 / 3)).norm() <= 1e-15);
  CHECK((u.col_marginal() - Eigen::VectorXd::Constant(3, 1.0 / 3)).norm() <= 1e-15);
  const Eigen::Vector2d a(0.2, 0.8);
  const Eigen::Vector3d b(0.5, 0.25, 0.25);
  const JointDistribution p = JointDistribution::Product(a, b);
  CHECK((p.row_marginal() - a).norm() <= 1e-15);
  CHECK((p.col_marginal() - b).norm() <= 1e-15);
}

TEST_CASE("matrix game examples") {
  PayoffMatrix pennies(2, 2);
  pennies << 1, -1, -1, 1;
  const MatrixGameSolution p = MatrixGameValue(pennies);
  CHECK(std::abs(p.value) <= 1e-12);
  CHECK(p.row_strategy(0) == doctest::Approx(0.5));
  CHECK(p.col_strategy(0) == doctest::Approx(0.5));

  CHECK(MatrixGameValue(PayoffMatrix::Constant(1, 1, -0.3)).value == doctest::Approx(-0.3));

  PayoffMatrix m(2, 2);
  m << 3, 0, 1, 2;
  const MatrixGameSolution s = MatrixGameValue(m);
  CHECK(std::abs(s.value - 1.5) <= 1e-9);
  CHECK(std::abs(s.row_strategy(0) - 0.25) <= 1e-9);
  CHECK(std::abs(s.row_strategy(1) - 0.75) <= 1e-9);
}

TEST_CASE("matrix game saddle point and antisymmetry") {
  Rng rng(11);
  std::uniform_int_distribution<int> pick(1, 8);
  for (int k = 0; k < 200; ++k) {
    const PayoffMatrix a = testing::RandomMatrix(rng, pick(rng), pick(rng), 2.0);
    const MatrixGameSolution s = MatrixGameValue(a);
    const double lower = (s.row_strategy.transpose() * a).minCoeff();
    const double upper = (a * s.col_strategy).maxCoeff();
    CHECK(lower >= s.value - 1e-9);
    CHECK(upper <= s.value + 1e-9);
    const MatrixGameSolution swapped = MatrixGameValue(-a.transpose());
    CHECK(swapped.value == doctest::Approx(-s.value).epsilon(1e-9));
  }
}

}  // namespace
}  // namespace kmg
