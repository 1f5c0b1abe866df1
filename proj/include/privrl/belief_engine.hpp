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

#ifndef PRIVRL_BELIEF_ENGINE_HPP_
#define PRIVRL_BELIEF_ENGINE_HPP_

#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "privrl/core_models.hpp"

namespace privrl {

using Belief = std::vector<double>;

inline constexpr double kMinLikelihood = 1e-300;

class ImpossibleObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Belief uniform_belief(int S);

// B_h(b; o)
Belief bayes_update(const Belief& b, const Pomdp& model, int h, int o);
// U_h(b; a, o) = B_{h+1}(T_h(a) b; o)
Belief belief_update(const Belief& b, int a, int o, const Pomdp& model, int h);
// T_h(a) b
Belief push_forward(const Belief& b, int a, const Pomdp& model, int h);

// obs = o_1..o_h, acts = a_1..a_{h-1}.
Belief exact_belief(const Pomdp& model, const std::vector<int>& obs,
                    const std::vector<int>& acts);

// Replays the memory from mu1 when it covers the whole history, otherwise
// from `prior` (uniform when empty) placed at step h-L.
Belief approx_belief(const Pomdp& model, const FiniteMemory& z, const Belief& prior = {});

// Memoized b^apx_h(z). Priors may differ by step; with `reset_on_impossible`
// an impossible observation restarts the replay from that step's prior
// instead of throwing.
class ApproxBeliefTable {
 public:
  enum class Provenance { kExactModel, kLearnedTruncated };

  ApproxBeliefTable(Pomdp model, int L, std::vector<Belief> step_priors,
                    Provenance provenance, bool reset_on_impossible);
  static ApproxBeliefTable exact(const Pomdp& model, int L);

  const Belief& get(int h, std::uint64_t key) const;
  const Belief& get(const FiniteMemory& z) const { return get(z.h, codec_.encode(z)); }
  const MemoryCodec& codec() const { return codec_; }
  const Pomdp& model() const { return model_; }
  int L() const { return codec_.L(); }
  Provenance provenance() const { return provenance_; }
  // Number of replays that hit an impossible observation.
  std::size_t reset_count() const;
  std::string to_json_debug(int h) const;

 private:
  Belief compute(int h, std::uint64_t key) const;

  Pomdp model_;
  MemoryCodec codec_;
  std::vector<Belief> priors_;  // indexed by step, 1..H
  Provenance provenance_;
  bool reset_on_impossible_;
  mutable std::mutex mu_;
  mutable std::vector<std::unordered_map<std::uint64_t, Belief>> memo_;
  mutable std::size_t resets_ = 0;
};

struct ObservabilityEstimate {
  double gamma = 0.0;
  bool exact = false;  // false: pairwise upper bound
};

// `emission` is row-major S x O.
ObservabilityEstimate estimate_observability(const std::vector<double>& emission, int S, int O);
ObservabilityEstimate estimate_observability(const Pomdp& model, int h);

}  // namespace privrl

#endif  // PRIVRL_BELIEF_ENGINE_HPP_
