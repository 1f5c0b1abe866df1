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

#ifndef PRIVRL_ASYMMETRIC_AC_HPP_
#define PRIVRL_ASYMMETRIC_AC_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "privrl/belief_engine.hpp"
#include "privrl/core_models.hpp"

namespace privrl {

// Q(z, s, a) per step over the memory keys reachable by syntax from step 1.
struct MemoryStateQ {
  int H = 0, S = 0, A = 0;
  MemoryCodec codec;
  double C = 0.0, delta1 = 0.0;  // zero for exact tables
  std::vector<std::vector<std::uint64_t>> keys;                 // per step
  std::vector<std::unordered_map<std::uint64_t, Dist>> table;  // key -> S*A

  double q(int h, std::uint64_t key, int s, int a) const;
  const Dist* find(int h, std::uint64_t key) const;
  double ceiling(int h) const { return H - h + 1; }
  std::string to_json() const;
};

// Keys of Z_1..Z_H; throws CapExceeded when the total count exceeds cap.
std::vector<std::vector<std::uint64_t>> enumerate_memory_keys(const MemoryCodec& codec, int H,
                                                              int A, int O,
                                                              std::size_t cap = kDefaultEnumCap);

MemoryStateQ exact_q(const Pomdp& model, const FiniteMemoryPolicy& policy,
                     std::size_t cap = kDefaultEnumCap);

struct OptimisticQConfig {
  int M = 1000;  // episodes per step
  double delta = 0.1;
  double C = 2.0;
};

// Per-step empirical counts from the batches, kept for diagnostics.
struct OptimisticQCounts {
  std::vector<long> n_sa;  // H*S*A from batch h
  std::vector<long> n_s;   // H*S from batch h
  long episodes_used = 0;
};

MemoryStateQ optimistic_q(const Pomdp& env, const FiniteMemoryPolicy& policy,
                          const OptimisticQConfig& cfg, Rng& rng,
                          OptimisticQCounts* counts = nullptr);

// Number of entries with Q(z,s,a) < r + E_true[V(z',s')] - tol, where V is
// computed from q itself under the policy.
std::size_t optimism_violations(const Pomdp& model, const FiniteMemoryPolicy& policy,
                                const MemoryStateQ& q, double tol = 1e-12);

// Rowwise Hedge with belief-weighted scores over every key in q.
FiniteMemoryPolicy mwu_update(const FiniteMemoryPolicy& prev, const MemoryStateQ& q,
                              const ApproxBeliefTable& belief, double eta);

using QOracle = std::function<MemoryStateQ(const FiniteMemoryPolicy&)>;

struct NpgResult {
  std::vector<FiniteMemoryPolicy> iterates;  // pi^1..pi^T
  MixturePolicy mixture() const;
  double eta = 0.0;
  long episodes_used = 0;
};

double default_eta(int A, int T, int H);

NpgResult belief_weighted_npg(const ApproxBeliefTable& belief, const QOracle& oracle, int T,
                              double eta);

NpgResult belief_weighted_npg(const Pomdp& env, const ApproxBeliefTable& belief, int T,
                              double eta, const OptimisticQConfig& cfg, Rng& rng);

}  // namespace privrl

#endif  // PRIVRL_ASYMMETRIC_AC_HPP_
