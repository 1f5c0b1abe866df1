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

#ifndef PRIVRL_BASELINES_HPP_
#define PRIVRL_BASELINES_HPP_

#include <cstdint>
#include <vector>

#include "privrl/core_models.hpp"

namespace privrl {

// Euclidean projection onto the probability simplex.
Dist project_simplex(const Dist& v);

// (H+1)/(H+t), t >= 1.
double epsilon_schedule(int H, long t);

struct VanillaAacConfig {
  int T = 100;         // iterations
  int K = 10;          // episodes per iteration
  double lambda = 0.1; // actor step size
  double alpha = 0.1;  // critic TD step size
  int L = 3;
};

struct VanillaAacResult {
  FiniteMemoryPolicy policy;
  long episodes_used = 0;
  // Per iteration: actor rows updated and distinct (h, key) pairs sampled.
  std::vector<std::size_t> actor_updates;
  std::vector<std::size_t> sampled_keys;
  std::size_t critic_entries = 0;
};

VanillaAacResult vanilla_aac(const Pomdp& env, const VanillaAacConfig& cfg, Rng& rng);

struct QLearningConfig {
  long episodes = 1000;
  double alpha = 0.1;
  int L = 3;
};

struct QLearningResult {
  FiniteMemoryPolicy policy;
  long episodes_used = 0;
  std::size_t updates = 0;
  std::size_t critic_entries = 0;
};

QLearningResult asymmetric_q_learning(const Pomdp& env, const QLearningConfig& cfg, Rng& rng);

}  // namespace privrl

#endif  // PRIVRL_BASELINES_HPP_
