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

#ifndef PRIVRL_MDP_ORACLE_HPP_
#define PRIVRL_MDP_ORACLE_HPP_

#include <cstdint>
#include <vector>

#include "privrl/core_models.hpp"

namespace privrl {

struct QTable {
  int H = 0, S = 0, A = 0;
  std::vector<double> Q;  // H*S*A
  std::vector<double> V;  // (H+1)*S, V_{H+1} = 0

  double q(int h, int s, int a) const {
    return Q[(static_cast<std::size_t>(h - 1) * S + s) * A + a];
  }
  double v(int h, int s) const { return V[static_cast<std::size_t>(h - 1) * S + s]; }
  double value(const std::vector<double>& mu1) const;
  // Greedy deterministic policy, smallest index on ties.
  StatePolicy greedy() const;
};

QTable value_iteration(const Mdp& mdp);
QTable evaluate_state_policy(const Mdp& mdp, const StatePolicy& pi);

// d[h-1][s] = P(s_h = s).
std::vector<std::vector<double>> occupancy(const Mdp& mdp, const StatePolicy& pi);

struct UcbViConfig {
  int episodes = 1000;
  double delta = 0.1;
  double c = 1.0;
};

// Hoeffding bonus used by the tabular learner.
double ucb_bonus(double c, int S, int A, int H, int K, double delta, long count);

struct UcbViResult {
  StatePolicy policy;
  std::vector<long> visits;  // N_h(s,a)
  long episodes_used = 0;
};

// UCB-VI on an MDP with known reward `reward` (H*S*A layout), only steps
// 1..last_step carry reward. The returned policy is greedy for the
// empirical model.
UcbViResult ucb_vi(const Mdp& env, const std::vector<double>& reward, int last_step,
                   const UcbViConfig& cfg, Rng& rng);

struct ReachResult {
  StatePolicy policy;
  double reach_estimate = 0.0;
  long episodes_used = 0;
};

// Learns a policy that reaches any state flagged in `targets` at step h.
ReachResult reach_policy(const Mdp& env, int h, const std::vector<bool>& targets, int budget,
                         double delta, Rng& rng, double c = 1.0);
ReachResult reach_policy(const Mdp& env, int h, int s, int budget, double delta, Rng& rng,
                         double c = 1.0);

}  // namespace privrl

#endif  // PRIVRL_MDP_ORACLE_HPP_
