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

#include "kmg/lp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace kmg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tableau arithmetic runs in extended precision; payoff differences in the
// CCE program can be many orders below the payoffs themselves.
using Real = long double;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
constexpr double kTieTol = 1e-12;
constexpr double kReducedTol = 1e-11;
constexpr int kDegenerateRun = 50;

// Original variable j equals offset + sign * column (or the difference of two
// columns for free variables).
struct ColumnMap {
  int column = -1;
  int negative_column = -1;
  double sign = 1.0;
  double offset = 0.0;
};

class Tableau {
 public:
  Tableau(Mat a, Vec rhs, std::vector<int> basis,
          int first_artificial, const LpOptions& options)
      : a0_(a),
        b0_(rhs),
        t_(std::move(a)),
        rhs_(std::move(rhs)),
        basis_(std::move(basis)),
        first_artificial_(first_artificial),
        options_(options) {}

  // Sets reduced costs d_j = c_j - c_B^T T_j for cost vector c.
  void SetCosts(const Vec& costs) {
    costs_ = costs;
    reduced_ = costs;
    value_ = 0.0;
    for (int i = 0; i < rows(); ++i) {
      const Real cb = costs(basis_[i]);
      if (cb == 0.0) continue;
      reduced_ -= cb * t_.row(i).transpose();
      value_ += cb * rhs_(i);
    }
  }

  // Dantzig pricing with the most stable leaving row; after a run of
  // degenerate pivots switches to Bland's rule until progress resumes.
  // Returns false when unbounded.
  bool Optimize(bool allow_artificial) {
    const int limit = allow_artificial ? cols() : first_artificial_;
    const Real cost_scale = costs_.size() > 0 ? costs_.cwiseAbs().maxCoeff() : 0.0;
    int degenerate_run = 0;
    while (true) {
      const bool bland = degenerate_run >= kDegenerateRun;
      int enter = -1;
      Real best_score = 0.0;
      for (int j = 0; j < limit; ++j) {
        const Real scale = 1.0 + cost_scale * t_.col(j).cwiseAbs().maxCoeff();
        if (reduced_(j) <= kReducedTol * scale) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (enter < 0 || reduced_(j) > best_score) {
          enter = j;
          best_score = reduced_(j);
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      Real best_ratio = kInf;
      const Real coef_tol =
          options_.pivot_tol * std::max<Real>(1.0, t_.col(enter).cwiseAbs().maxCoeff());
      for (int i = 0; i < rows(); ++i) {
        const Real coef = t_(i, enter);
        if (coef <= coef_tol) continue;
        const Real ratio = std::max<Real>(0.0, rhs_(i)) / coef;
        if (leave < 0 || ratio < best_ratio - kTieTol) {
          best_ratio = ratio;
          leave = i;
        } else if (ratio <= best_ratio + kTieTol) {
          const bool better = bland ? basis_[i] < basis_[leave]
                                    : coef > t_(leave, enter);
          if (better) {
            best_ratio = std::min(best_ratio, ratio);
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      degenerate_run = best_ratio <= kTieTol ? degenerate_run + 1 : 0;
      Pivot(leave, enter);
    }
  }

  void Pivot(int r, int e) {
    if (++pivots_ > options_.max_pivots) {
      throw std::runtime_error("simplex pivot guard tripped (cycling?)");
    }
    const Real p = t_(r, e);
    t_.row(r) /= p;
    rhs_(r) /= p;
    t_(r, e) = 1.0;
    for (int i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const Real f = t_(i, e);
      if (f == 0.0) continue;
      t_.row(i) -= f * t_.row(r);
      rhs_(i) -= f * rhs_(r);
      t_(i, e) = 0.0;
    }
    const Real f = reduced_(e);
    if (f != 0.0) {
      reduced_ -= f * t_.row(r).transpose();
      value_ += f * rhs_(r);
      reduced_(e) = 0.0;
    }
    basis_[r] = e;
    Reinvert();
  }

  // Rebuilds the tableau from the original rows and the current basis.
  void Reinvert() {
    const int m = rows();
    if (m == 0) return;
    Mat b(m, m);
    for (int c = 0; c < m; ++c) b.col(c) = a0_.col(basis_[c]);
    const Eigen::FullPivLU<Mat> lu(b);
    if (!lu.isInvertible()) return;
    Mat t = lu.solve(a0_);
    Vec rhs = lu.solve(b0_);
    if (!t.allFinite() || !rhs.allFinite()) return;
    for (int c = 0; c < m; ++c) {
      t.col(basis_[c]).setZero();
      t(c, basis_[c]) = 1.0;
    }
    t_ = std::move(t);
    rhs_ = std::move(rhs);
    if (costs_.size() > 0) SetCosts(costs_);
  }

  // Pivots basic artificials out at zero level; drops rows that are redundant.
  void DriveOutArtificials(std::vector<int>* kept_rows) {
    for (int i = 0; i < rows();) {
      if (basis_[i] < first_artificial_) {
        ++i;
        continue;
      }
      int enter = -1;
      for (int j = 0; j < first_artificial_; ++j) {
        if (std::abs(t_(i, j)) > 1e-9) {
          enter = j;
          break;
        }
      }
      if (enter >= 0) {
        Pivot(i, enter);
        ++i;
      } else {
        RemoveRow(i);
        kept_rows->erase(kept_rows->begin() + i);
      }
    }
  }

  int rows() const { return static_cast<int>(t_.rows()); }
  int cols() const { return static_cast<int>(t_.cols()); }
  Real value() const { return value_; }
  int pivots() const { return pivots_; }
  const std::vector<int>& basis() const { return basis_; }
  const Vec& rhs() const { return rhs_; }

 private:
  void RemoveRow(int r) {
    const int m = rows() - 1;
    for (int i = r; i < m; ++i) {
      t_.row(i) = t_.row(i + 1);
      rhs_(i) = rhs_(i + 1);
      basis_[i] = basis_[i + 1];
      a0_.row(i) = a0_.row(i + 1);
      b0_(i) = b0_(i + 1);
    }
    a0_.conservativeResize(m, Eigen::NoChange);
    b0_.conservativeResize(m);
    t_.conservativeResize(m, Eigen::NoChange);
    rhs_.conservativeResize(m);
    basis_.pop_back();
  }

  Mat a0_;
  Vec b0_;
  Mat t_;
  Vec rhs_;
  std::vector<int> basis_;
  int first_artificial_;
  LpOptions options_;
  Vec costs_;
  Vec reduced_;
  Real value_ = 0.0;
  int pivots_ = 0;
};

}  // namespace

LinearProgram LinearProgram::NonNegative(int n) {
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.a_ub.resize(0, n);
  lp.b_ub.resize(0);
  lp.a_eq.resize(0, n);
  lp.b_eq.resize(0);
  lp.lower = Eigen::VectorXd::Zero(n);
  lp.upper = Eigen::VectorXd::Constant(n, kInf);
  return lp;
}

void LinearProgram::Validate() const {
  const int n = num_vars();
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (a_ub.cols() != n && a_ub.rows() > 0) fail("a_ub column count");
  if (a_ub.rows() != b_ub.size()) fail("a_ub/b_ub row count");
  if (a_eq.cols() != n && a_eq.rows() > 0) fail("a_eq column count");
  if (a_eq.rows() != b_eq.size()) fail("a_eq/b_eq row count");
  if (lower.size() != n || upper.size() != n) fail("bound vector size");
  for (int j = 0; j < n; ++j) {
    if (lower(j) > upper(j)) fail("lower bound exceeds upper bound");
    if (lower(j) == kInf || upper(j) == -kInf) fail("infinite bound direction");
  }
  if (!objective.allFinite() || !a_ub.allFinite() || !b_ub.allFinite() ||
      !a_eq.allFinite() || !b_eq.allFinite()) {
    fail("non-finite LP data");
  }
}

double LinearProgram::MaxViolation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  if (a_ub.rows() > 0) {
    worst = std::max(worst, (a_ub * x - b_ub).maxCoeff());
  }
  if (a_eq.rows() > 0) {
    worst = std::max(worst, (a_eq * x - b_eq).cwiseAbs().maxCoeff());
  }
  for (int j = 0; j < num_vars(); ++j) {
    worst = std::max(worst, lower(j) - x(j));
    worst = std::max(worst, x(j) - upper(j));
  }
  return worst;
}

std::string ToString(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kFeasible:
      return "feasible";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
  }
  return "unknown";
}

LpSolution SolveLp(const LinearProgram& problem, const LpOptions& options) {
  problem.Validate();
  const int n = problem.num_vars();

  // Shift/split variables so that every column is >= 0.
  std::vector<ColumnMap> maps(n);
  std::vector<int> bounded;  // variables needing an explicit upper-bound row
  int n_cols = 0;
  for (int j = 0; j < n; ++j) {
    const double lo = problem.lower(j), hi = problem.upper(j);
    ColumnMap& m = maps[j];
    if (std::isfinite(lo)) {
      m.column = n_cols++;
      m.offset = lo;
      if (std::isfinite(hi)) bounded.push_back(j);
    } else if (std::isfinite(hi)) {
      m.column = n_cols++;
      m.sign = -1.0;
      m.offset = hi;
    } else {
      m.column = n_cols++;
      m.negative_column = n_cols++;
    }
  }

  const int m_ub = static_cast<int>(problem.a_ub.rows());
  const int m_eq = static_cast<int>(problem.a_eq.rows());
  const int m_bd = static_cast<int>(bounded.size());
  const int m = m_ub + m_bd + m_eq;
  const int first_eq = m_ub + m_bd;

  Mat rows = Mat::Zero(m, n_cols);
  Vec rhs(m);
  Vec costs = Vec::Zero(n_cols);

  auto scatter = [&](const Eigen::VectorXd& coef, int r, Real b) {
    Real shift = 0.0;
    for (int j = 0; j < n; ++j) {
      const Real c = coef(j);
      if (c == 0.0) continue;
      const ColumnMap& mp = maps[j];
      rows(r, mp.column) += c * mp.sign;
      if (mp.negative_column >= 0) rows(r, mp.negative_column) -= c;
      shift += c * mp.offset;
    }
    rhs(r) = b - shift;
  };
  for (int i = 0; i < m_ub; ++i) {
    scatter(problem.a_ub.row(i).transpose(), i, problem.b_ub(i));
  }
  for (int k = 0; k < m_bd; ++k) {
    const int j = bounded[k];
    rows(m_ub + k, maps[j].column) = 1.0;
    rhs(m_ub + k) = problem.upper(j) - problem.lower(j);
  }
  for (int i = 0; i < m_eq; ++i) {
    scatter(problem.a_eq.row(i).transpose(), first_eq + i, problem.b_eq(i));
  }
  for (int j = 0; j < n; ++j) {
    const ColumnMap& mp = maps[j];
    costs(mp.column) += problem.objective(j) * mp.sign;
    if (mp.negative_column >= 0) costs(mp.negative_column) -= problem.objective(j);
  }

  // Equilibrate rows so that tiny-difference constraints are not swamped.
  for (int i = 0; i < m; ++i) {
    const Real top = rows.row(i).cwiseAbs().maxCoeff();
    if (top > 0.0) {
      rows.row(i) /= top;
      rhs(i) /= top;
    }
  }

  // Slack for every inequality row; artificial where no +1 slack can start
  // the basis.
  const int n_slack = first_eq;
  std::vector<int> needs_artificial;
  std::vector<Real> row_sign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    if (rhs(i) < 0.0) row_sign[i] = -1.0;
    if (i >= first_eq || row_sign[i] < 0.0) needs_artificial.push_back(i);
  }
  const int first_art = n_cols + n_slack;
  const int total = first_art + static_cast<int>(needs_artificial.size());
  Mat full = Mat::Zero(m, total);
  full.leftCols(n_cols) = rows;
  for (int i = 0; i < n_slack; ++i) full(i, n_cols + i) = 1.0;
  std::vector<int> basis(m, -1);
  for (int i = 0; i < m; ++i) {
    if (row_sign[i] < 0.0) {
      full.row(i) *= -1.0;
      rhs(i) *= -1.0;
    }
    if (i < n_slack && row_sign[i] > 0.0) basis[i] = n_cols + i;
  }
  for (size_t k = 0; k < needs_artificial.size(); ++k) {
    const int i = needs_artificial[k];
    full(i, first_art + static_cast<int>(k)) = 1.0;
    basis[i] = first_art + static_cast<int>(k);
  }

  Tableau tableau(full, rhs, basis, first_art, options);
  LpSolution solution;

  if (first_art < total) {
    Vec phase1 = Vec::Zero(total);
    phase1.tail(total - first_art).setConstant(-1.0);
    tableau.SetCosts(phase1);
    tableau.Optimize(/*allow_artificial=*/true);
    const Real scale = 1.0 + rhs.cwiseAbs().maxCoeff();
    if (tableau.value() < -1e-9 * scale) {
      solution.status = LpStatus::kInfeasible;
      solution.pivots = tableau.pivots();
      return solution;
    }
  }
  std::vector<int> kept_rows(m);
  for (int i = 0; i < m; ++i) kept_rows[i] = i;
  tableau.DriveOutArtificials(&kept_rows);

  Vec phase2 = Vec::Zero(total);
  phase2.head(n_cols) = costs;
  tableau.SetCosts(phase2);
  const bool bounded_opt = tableau.Optimize(/*allow_artificial=*/false);
  solution.pivots = tableau.pivots();
  if (!bounded_opt) {
    solution.status = LpStatus::kUnbounded;
    return solution;
  }

  // Recompute the basic solution from the original rows to shed pivot drift.
  const int k = tableau.rows();
  Vec standard = Vec::Zero(total);
  if (k > 0) {
    Mat basis_matrix(k, k);
    Vec b(k);
    for (int i = 0; i < k; ++i) {
      b(i) = rhs(kept_rows[i]);
      for (int c = 0; c < k; ++c) {
        basis_matrix(i, c) = full(kept_rows[i], tableau.basis()[c]);
      }
    }
    Vec xb = basis_matrix.fullPivLu().solve(b);
    if (!xb.allFinite() || (basis_matrix * xb - b).cwiseAbs().maxCoeff() > 1e-9) {
      xb = tableau.rhs();
    }
    for (int c = 0; c < k; ++c) standard(tableau.basis()[c]) = std::max<Real>(0.0, xb(c));
  }

  solution.x.resize(n);
  for (int j = 0; j < n; ++j) {
    const ColumnMap& mp = maps[j];
    Real v = mp.offset + mp.sign * standard(mp.column);
    if (mp.negative_column >= 0) v -= standard(mp.negative_column);
    solution.x(j) = static_cast<double>(v);
  }
  solution.objective = problem.objective.dot(solution.x);
  solution.status = problem.objective.isZero(0.0) ? LpStatus::kFeasible
                                                  : LpStatus::kOptimal;
  return solution;
}

}  // namespace kmg
