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
#include <limits>
#include <vector>

#include "doctest.h"
#include "kmg/lp.h"
#include "test_util.h"

namespace kmg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Best objective over all basic feasible points of
// {A x <= b, 0 <= x <= 1}, by enumerating n-subsets of the constraint rows.
double VertexOracle(const Eigen::VectorXd& c, const Eigen::MatrixXd& a,
                    const Eigen::VectorXd& b) {
  const int n = static_cast<int>(c.size()), m = static_cast<int>(a.rows());
  Eigen::MatrixXd rows(m + 2 * n, n);
  Eigen::VectorXd rhs(m + 2 * n);
  rows.topRows(m) = a;
  rhs.head(m) = b;
  rows.middleRows(m, n) = -Eigen::MatrixXd::Identity(n, n);
  rhs.segment(m, n).setZero();
  rows.bottomRows(n) = Eigen::MatrixXd::Identity(n, n);
  rhs.tail(n).setOnes();
  const int total = m + 2 * n;
  double best = -kInf;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    Eigen::MatrixXd sys(n, n);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      sys.row(i) = rows.row(pick[i]);
      r(i) = rhs(pick[i]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(r);
      if ((rows * x - rhs).maxCoeff() <= 1e-9) best = std::max(best, c.dot(x));
    }
    int k = n - 1;
    while (k >= 0 && pick[k] == total - n + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int i = k + 1; i < n; ++i) pick[i] = pick[i - 1] + 1;
  }
  return best;
}

TEST_CASE("feasibility with an equality") {
  LinearProgram lp = LinearProgram::NonNegative(1);
  lp.upper(0) = 2.0;
  lp.a_eq = Eigen::MatrixXd::Ones(1, 1);
  lp.b_eq = Eigen::VectorXd::Ones(1);
  const LpSolution s = SolveLp(lp);
  CHECK(s.status == LpStatus::kFeasible);
  CHECK(s.x(0) == doctest::Approx(1.0));
}

TEST_CASE("maximize x subject to x <= 3") {
  LinearProgram lp = LinearProgram::NonNegative(1);
  lp.objective(0) = 1.0;
  lp.lower(0) = -kInf;
  lp.a_ub = Eigen::MatrixXd::Ones(1, 1);
  lp.b_ub = Eigen::VectorXd::Constant(1, 3.0);
  const LpSolution s = SolveLp(lp);
  CHECK(s.status == LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(3.0));
}

TEST_CASE("infeasible and unbounded") {
  LinearProgram lp = LinearProgram::NonNegative(1);
  lp.a_ub = -Eigen::MatrixXd::Ones(1, 1);
  lp.b_ub = -Eigen::VectorXd::Constant(1, 2.0);  // x >= 2
  lp.upper(0) = 1.0;
  CHECK(SolveLp(lp).status == LpStatus::kInfeasible);

  LinearProgram open = LinearProgram::NonNegative(2);
  open.objective << 1.0, 1.0;
  open.a_ub = (Eigen::MatrixXd(1, 2) << 1.0, -1.0).finished();
  open.b_ub = Eigen::VectorXd::Ones(1);
  CHECK(SolveLp(open).status == LpStatus::kUnbounded);
}

TEST_CASE("free variables and negative bounds") {
  // maximize -|x - 0.5| style: max y s.t. y <= x - 0.5, y <= 0.5 - x, x free.
  LinearProgram lp = LinearProgram::NonNegative(2);
  lp.lower << -kInf, -kInf;
  lp.objective << 0.0, 1.0;
  lp.a_ub = (Eigen::MatrixXd(2, 2) << -1, 1, 1, 1).finished();
  lp.b_ub = (Eigen::VectorXd(2) << -0.5, 0.5).finished();
  const LpSolution s = SolveLp(lp);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.x(0) == doctest::Approx(0.5));
  CHECK(s.objective == doctest::Approx(0.0).epsilon(1e-12));

  LinearProgram neg = LinearProgram::NonNegative(1);
  neg.lower(0) = -3.0;
  neg.upper(0) = -1.0;
  neg.objective(0) = 1.0;
  CHECK(SolveLp(neg).x(0) == doctest::Approx(-1.0));
  neg.objective(0) = -1.0;
  CHECK(SolveLp(neg).x(0) == doctest::Approx(-3.0));
}

TEST_CASE("malformed problems are rejected") {
  LinearProgram lp = LinearProgram::NonNegative(2);
  lp.a_ub = Eigen::MatrixXd::Ones(1, 3);
  lp.b_ub = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(SolveLp(lp), std::invalid_argument);
}

TEST_CASE("random LPs match vertex enumeration") {
  Rng rng(2024);
  std::uniform_int_distribution<int> pick_n(1, 6), pick_m(1, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.1, 2.0);
  for (int k = 0; k < 300; ++k) {
    const int n = pick_n(rng), m = pick_m(rng);
    LinearProgram lp = LinearProgram::NonNegative(n);
    lp.upper.setOnes();
    lp.objective = testing::RandomMatrix(rng, n, 1, 1.0);
    lp.a_ub = testing::RandomMatrix(rng, m, n, 1.0);
    lp.b_ub.resize(m);
    for (int i = 0; i < m; ++i) lp.b_ub(i) = pos(rng);  // x = 0 is feasible
    const LpSolution s = SolveLp(lp);
    REQUIRE(s.status != LpStatus::kInfeasible);
    CHECK(lp.MaxViolation(s.x) <= 1e-9);
    const double oracle = VertexOracle(lp.objective, lp.a_ub, lp.b_ub);
    CHECK(s.objective == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("equality-constrained random LPs stay feasible") {
  Rng rng(99);
  for (int k = 0; k < 200; ++k) {
    const int n = 6;
    LinearProgram lp = LinearProgram::NonNegative(n);
    lp.objective = testing::RandomMatrix(rng, n, 1, 1.0);
    lp.a_eq = Eigen::MatrixXd::Ones(1, n);
    lp.b_eq = Eigen::VectorXd::Ones(1);
    lp.a_ub = testing::RandomMatrix(rng, 4, n, 1.0);
    lp.b_ub = Eigen::VectorXd::Constant(4, 0.5);
    const LpSolution s = SolveLp(lp);
    if (s.status == LpStatus::kInfeasible) continue;
    CHECK(lp.MaxViolation(s.x) <= 1e-9);
  }
}

TEST_CASE("redundant equalities are dropped") {
  LinearProgram lp = LinearProgram::NonNegative(3);
  lp.objective << 1.0, 2.0, 0.0;
  lp.a_eq = (Eigen::MatrixXd(3, 3) << 1, 1, 1, 2, 2, 2, 1, 0, 0).finished();
  lp.b_eq = (Eigen::VectorXd(3) << 1, 2, 0.25).finished();
  const LpSolution s = SolveLp(lp);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(0.25 + 1.5));
  CHECK(lp.MaxViolation(s.x) <= 1e-12);
}

TEST_CASE("solver is deterministic") {
  Rng rng(5);
  LinearProgram lp = LinearProgram::NonNegative(5);
  lp.objective = testing::RandomMatrix(rng, 5, 1, 1.0);
  lp.upper.setConstant(3.0);
  lp.a_ub = testing::RandomMatrix(rng, 4, 5, 1.0);
  lp.b_ub = Eigen::VectorXd::Ones(4);
  const LpSolution a = SolveLp(lp), b = SolveLp(lp);
  CHECK(a.pivots == b.pivots);
  CHECK(a.x == b.x);
  CHECK(ToString(a.status) == ToString(b.status));
}

TEST_CASE("pivot guard") {
  LinearProgram lp = LinearProgram::NonNegative(3);
  lp.objective << 1, 1, 1;
  lp.a_ub = Eigen::MatrixXd::Identity(3, 3);
  lp.b_ub = Eigen::VectorXd::Ones(3);
  LpOptions options;
  options.max_pivots = 1;
  CHECK_THROWS_AS(SolveLp(lp, options), std::runtime_error);
}

}  // namespace
}  // namespace kmg
