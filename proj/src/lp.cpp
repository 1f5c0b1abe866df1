// Copyright 2026 The privrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "privrl/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace privrl {

namespace {

constexpr double kEps = 1e-11;

struct Tableau {
  int m = 0, n = 0;  // rows, columns (excluding rhs)
  std::vector<std::vector<double>> t;  // m rows of n+1 entries
  std::vector<int> basis;

  void pivot(int row, int col) {
    double p = t[row][col];
    for (double& v : t[row]) v /= p;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      double f = t[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j <= n; ++j) t[i][j] -= f * t[row][j];
    }
    basis[row] = col;
  }

  // Minimizes cost over the columns allowed by `usable`. Returns false when
  // unbounded.
  bool run(const std::vector<double>& cost, const std::vector<bool>& usable) {
    for (int iter = 0; iter < 100000; ++iter) {
      std::vector<double> cb(m);
      for (int i = 0; i < m; ++i) cb[i] = cost[basis[i]];
      int enter = -1;
      for (int j = 0; j < n; ++j) {
        if (!usable[j]) continue;
        double red = cost[j];
        for (int i = 0; i < m; ++i) red -= cb[i] * t[i][j];
        if (red < -kEps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (t[i][enter] > kEps) {
          double ratio = t[i][n] / t[i][enter];
          if (ratio < best - kEps || (std::abs(ratio - best) <= kEps && leave >= 0 &&
                                      basis[i] < basis[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex iteration limit");
  }
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp) {
  const int nx = static_cast<int>(lp.c.size());
  const int mu = static_cast<int>(lp.A_ub.size());
  const int me = static_cast<int>(lp.A_eq.size());
  const int m = mu + me;
  // Columns: x (nx), slacks (mu), artificials (m).
  Tableau tab;
  tab.m = m;
  tab.n = nx + mu + m;
  tab.t.assign(m, std::vector<double>(tab.n + 1, 0.0));
  tab.basis.assign(m, 0);
  for (int i = 0; i < m; ++i) {
    const std::vector<double>& row = i < mu ? lp.A_ub[i] : lp.A_eq[i - mu];
    double rhs = i < mu ? lp.b_ub[i] : lp.b_eq[i - mu];
    double sign = rhs < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < nx; ++j) tab.t[i][j] = sign * row[j];
    if (i < mu) tab.t[i][nx + i] = sign;
    tab.t[i][nx + mu + i] = 1.0;
    tab.t[i][tab.n] = sign * rhs;
    tab.basis[i] = nx + mu + i;
  }
  std::vector<double> phase1(tab.n, 0.0);
  for (int i = 0; i < m; ++i) phase1[nx + mu + i] = 1.0;
  std::vector<bool> all(tab.n, true);
  tab.run(phase1, all);
  double infeas = 0.0;
  for (int i = 0; i < m; ++i)
    if (tab.basis[i] >= nx + mu) infeas += tab.t[i][tab.n];
  LpResult res;
  if (infeas > 1e-9) {
    res.status = LpStatus::kInfeasible;
    return res;
  }
  // Drive zero-level artificials out of the basis; drop redundant rows.
  for (int i = 0; i < tab.m; ++i) {
    if (tab.basis[i] < nx + mu) continue;
    int col = -1;
    for (int j = 0; j < nx + mu; ++j)
      if (std::abs(tab.t[i][j]) > 1e-9) {
        col = j;
        break;
      }
    if (col >= 0) {
      tab.pivot(i, col);
    } else {
      tab.t.erase(tab.t.begin() + i);
      tab.basis.erase(tab.basis.begin() + i);
      --tab.m;
      --i;
    }
  }
  std::vector<double> phase2(tab.n, 0.0);
  for (int j = 0; j < nx; ++j) phase2[j] = lp.c[j];
  std::vector<bool> usable(tab.n, true);
  for (int j = nx + mu; j < tab.n; ++j) usable[j] = false;
  if (!tab.run(phase2, usable)) {
    res.status = LpStatus::kUnbounded;
    return res;
  }
  res.status = LpStatus::kOptimal;
  res.x.assign(nx, 0.0);
  for (int i = 0; i < tab.m; ++i)
    if (tab.basis[i] < nx) res.x[tab.basis[i]] = tab.t[i][tab.n];
  res.objective = 0.0;
  for (int j = 0; j < nx; ++j) res.objective += lp.c[j] * res.x[j];
  return res;
}

MatrixGameSolution solve_matrix_game(const std::vector<std::vector<double>>& M) {
  const int R = static_cast<int>(M.size());
  const int C = static_cast<int>(M.front().size());
  double lo = M[0][0];
  for (auto& row : M)
    for (double v : row) lo = std::min(lo, v);
  const double shift = 1.0 - lo;  // shifted payoffs are >= 1

  // Row player: min sum(u) s.t. sum_i u_i M'_ij >= 1.
  LinearProgram row_lp;
  row_lp.c.assign(R, 1.0);
  for (int j = 0; j < C; ++j) {
    std::vector<double> a(R);
    for (int i = 0; i < R; ++i) a[i] = -(M[i][j] + shift);
    row_lp.A_ub.push_back(a);
    row_lp.b_ub.push_back(-1.0);
  }
  LpResult ru = solve_lp(row_lp);
  // Column player: max sum(w) s.t. sum_j M'_ij w_j <= 1.
  LinearProgram col_lp;
  col_lp.c.assign(C, -1.0);
  for (int i = 0; i < R; ++i) {
    std::vector<double> a(C);
    for (int j = 0; j < C; ++j) a[j] = M[i][j] + shift;
    col_lp.A_ub.push_back(a);
    col_lp.b_ub.push_back(1.0);
  }
  LpResult cw = solve_lp(col_lp);
  if (ru.status != LpStatus::kOptimal || cw.status != LpStatus::kOptimal)
    throw std::runtime_error("matrix game LP failed");
  MatrixGameSolution sol;
  double su = 0.0, sw = 0.0;
  for (double v : ru.x) su += v;
  for (double v : cw.x) sw += v;
  sol.row.resize(R);
  sol.col.resize(C);
  for (int i = 0; i < R; ++i) sol.row[i] = ru.x[i] / su;
  for (int j = 0; j < C; ++j) sol.col[j] = cw.x[j] / sw;
  sol.value = 1.0 / su - shift;
  return sol;
}

}  // namespace privrl
