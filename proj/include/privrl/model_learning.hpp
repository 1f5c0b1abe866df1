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

#ifndef PRIVRL_MODEL_LEARNING_HPP_
#define PRIVRL_MODEL_LEARNING_HPP_

#include <string>
#include <vector>

#include "privrl/belief_engine.hpp"
#include "privrl/core_models.hpp"

namespace privrl {

// Visit counts from reward-free privileged exploration. Counts at step h
// only come from episodes whose forced action was taken at step h.
struct EmpiricalModel {
  int H = 0, S = 0, A = 0, O = 0;
  std::vector<long> n_s;    // H*S
  std::vector<long> n_sa;   // H*S*A
  std::vector<long> n_sas;  // H*S*A*S
  std::vector<long> n_so;   // H*S*O
  std::vector<long> n_first;  // S, first-step states over all episodes
  long N = 0;               // episodes per (h, s, a)
  long episodes_used = 0;
  std::vector<double> reach_estimates;  // H*S

  static EmpiricalModel empty(int H, int S, int A, int O);
  long& s(int h, int st) { return n_s[static_cast<std::size_t>(h - 1) * S + st]; }
  long s(int h, int st) const { return n_s[static_cast<std::size_t>(h - 1) * S + st]; }
  std::size_t sa_index(int h, int st, int a) const {
    return (static_cast<std::size_t>(h - 1) * S + st) * A + a;
  }
  // Adds one visit at step h.
  void record(int h, int st, int o, int a, int s_next);
  // Marginals agree with their refinements.
  bool consistent() const;
};

struct ExploreConfig {
  int N = 100;        // episodes per (h, s, a)
  int K_reach = 500;  // reach-learner budget per (h, s)
  double delta = 0.1;
};

EmpiricalModel explore_and_count(const Pomdp& env, const ExploreConfig& cfg, Rng& rng);

struct ModelEstimate {
  Pomdp model;  // rewards copied from the known reward table
  std::vector<bool> zero_sa;  // H*S*A rows that fell back to uniform
  std::vector<bool> zero_s;   // H*S emission rows that fell back to uniform
};

// With `true_mu1` non-empty the initial distribution is taken as known.
ModelEstimate estimate_model(const EmpiricalModel& counts, const std::vector<double>& reward,
                             const std::vector<double>& true_mu1 = {});

struct TruncatedModel {
  Pomdp model;                         // redirected, full state indexing
  std::vector<std::vector<bool>> low;  // low[h-1][s]
  double eps = 0.0;

  bool is_low(int h, int s) const { return low[h - 1][s]; }
  std::vector<int> high_states(int h) const;
  std::string to_json() const;
};

class TruncationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// S_low_h = { s : N_h(s) / (N A) <= eps }. Low mass of every transition
// row, and of mu1, is spread uniformly over the high states of the next step.
TruncatedModel truncate_model(const Pomdp& estimate, const EmpiricalModel& counts, double eps);

ApproxBeliefTable build_approx_belief(const TruncatedModel& truncated, int L);

struct TheoryDefaults {
  double eps1 = 0.0;
  long N = 0;
  int L = 1;
};
TheoryDefaults theory_defaults(int S, int A, int O, int H, double gamma, double eps, double delta);

}  // namespace privrl

#endif  // PRIVRL_MODEL_LEARNING_HPP_
