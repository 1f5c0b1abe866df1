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

#ifndef PRIVRL_LP_HPP_
#define PRIVRL_LP_HPP_

#include <vector>

namespace privrl {

// Dense two-phase simplex with Bland's rule, sized for the handful of
// variables used by the observability and matrix-game solvers.
//
//   minimize c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
struct LinearProgram {
  std::vector<double> c;
  std::vector<std::vector<double>> A_ub;
  std::vector<double> b_ub;
  std::vector<std::vector<double>> A_eq;
  std::vector<double> b_eq;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
};

LpResult solve_lp(const LinearProgram& lp);

// Zero-sum matrix game where the row player maximizes M[i][j].
struct MatrixGameSolution {
  std::vector<double> row, col;
  double value = 0.0;
};
MatrixGameSolution solve_matrix_game(const std::vector<std::vector<double>>& M);

}  // namespace privrl

#endif  // PRIVRL_LP_HPP_
