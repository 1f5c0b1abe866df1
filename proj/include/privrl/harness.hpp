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

#ifndef PRIVRL_HARNESS_HPP_
#define PRIVRL_HARNESS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "privrl/belief_engine.hpp"
#include "privrl/core_models.hpp"

namespace privrl {

// ---------------------------------------------------------------------------
// Instance generators

enum class InstanceKind { kGeneric, kDeterministicTransition, kBlockMdp };

InstanceKind parse_instance_kind(const std::string& name);
const char* instance_kind_name(InstanceKind kind);

// Rewards are U[0,1]. Throws ModelError on infeasible sizes.
Pomdp gen_pomdp(InstanceKind kind, int S, int A, int O, int H, std::uint64_t seed);

// One estimate per step.
std::vector<ObservabilityEstimate> observability_profile(const Pomdp& model);

struct PosgSpec {
  std::string kind = "generic";  // generic | block | matching_pennies
  int H = 2, S = 2;
  std::vector<int> Ai{2, 2};
  std::vector<int> Oi{2, 2};
  Sharing sharing = Sharing::kFull;
  bool zero_sum = false;  // two agents; r_2 = 1 - r_1
};

Posg gen_posg(const PosgSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Enumeration oracles

struct WeightedTrajectory {
  std::vector<int> s, o, a;  // s_1..s_H, o_1..o_H, a_1..a_H
  double prob = 0.0;
};

// Every trajectory with positive probability. Throws CapExceeded when
// (S*O*A)^H exceeds cap.
std::vector<WeightedTrajectory> enumerate_trajectories(const Pomdp& model, const Policy& policy,
                                                       std::size_t cap = kDefaultEnumCap);

// Sum of |P - Q| over the union of supports.
double trajectory_l1(const std::vector<WeightedTrajectory>& p,
                     const std::vector<WeightedTrajectory>& q);

// Deterministic pseudo-random history policy; rows are Dirichlet(1) draws
// keyed by (seed, step, key).
class RandomHistoryPolicy : public Policy {
 public:
  RandomHistoryPolicy(int H, int S, int A, int O, bool with_states, std::uint64_t seed);
  int num_actions() const override { return keys_.num_actions(); }
  std::uint64_t init_key(int s1, int o1) const override { return keys_.init_key(s1, o1); }
  std::uint64_t next_key(int h, std::uint64_t key, int a, int s_next, int o_next) const override {
    return keys_.next_key(h, key, a, s_next, o_next);
  }
  void dist(int h, std::uint64_t key, int s, double* out) const override;
  double key_space(int h) const override { return keys_.key_space(h); }

 private:
  FullHistoryPolicy keys_;
  std::uint64_t seed_;
};

struct TrajBound {
  double tv = 0.0;            // sum |P - P_hat| over state-inclusive trajectories
  double bound = 0.0;         // initial + transition + emission terms
  double belief_error = 0.0;  // max_h E ||b_h - b_hat_h||_1
  double slack_tv() const { return bound - tv; }
  double slack_belief() const { return 2.0 * bound - belief_error; }
};

TrajBound traj_bound(const Pomdp& P, const Pomdp& P_hat, const Policy& policy,
                     std::size_t cap = kDefaultEnumCap);

// Both sides of the marginal/conditional inequality; returns the smaller slack.
double trick_slack(const std::vector<std::vector<double>>& P1,
                   const std::vector<std::vector<double>>& P2);

// l1(x, y) - l1(x_hat, y_hat) after redirecting mass off `masked`.
double mask_slack(const std::vector<double>& x, const std::vector<double>& y,
                  const std::vector<int>& masked);

enum class InequalityCase { kTraj, kTrick, kMask };
InequalityCase parse_inequality_case(const std::string& name);

struct InequalityReport {
  InequalityCase which = InequalityCase::kTraj;
  int trials = 0;
  int failures = 0;
  double min_slack = 0.0;
  bool pass(double tol = -1e-10) const { return failures == 0 && min_slack >= tol; }
};

// traj: S=A=O=2, H=3 triples; the TV bound is checked under a state-aware
// policy and both bounds under a history policy.
InequalityReport check_inequalities(InequalityCase which, int trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Brute force over deterministic finite-memory policies

struct MemoryBruteForce {
  double value = 0.0;
  FiniteMemoryPolicy policy;
  std::size_t candidates = 0;
};

// Enumerates steps 1..H-1 and picks the last step greedily. Throws
// CapExceeded when more than cap candidates would be needed.
MemoryBruteForce best_deterministic_memory_policy(const Pomdp& model, int L,
                                                  std::size_t cap = 1u << 22);

// ---------------------------------------------------------------------------
// Experiments

struct AlgoParams {
  int L = 3;
  std::vector<double> alpha_grid{0.05, 0.1, 0.3};
  double lambda = 0.1;
  int aac_K = 10;
  double delta = 0.1;
  double decoder_fraction = 0.25;  // distillation budget share for decoders
  int npg_T = 10;
  double truncation_eps = 0.02;
};

struct TrainedPolicy {
  PolicyPtr policy;
  long episodes_used = 0;
};

// algo: distill | npg | qlearning | vanilla_aac
TrainedPolicy train_algorithm(const std::string& algo, const Pomdp& env, long budget,
                              const AlgoParams& params, Rng& rng);

struct ExperimentConfig {
  std::string instance_kind = "deterministic_transition";
  int S = 2, A = 2, O = 3, H = 5;
  int instances = 20;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> algos{"npg", "distill", "qlearning", "vanilla_aac"};
  long budget = 2000;
  int checkpoints = 1;  // learning-curve points at budget*k/checkpoints
  AlgoParams params;
  std::string out_dir;
  int threads = 0;  // 0: hardware concurrency

  static ExperimentConfig from_json(const std::string& text);
  std::string to_json() const;
  // Throws ModelError on invalid fields.
  void validate() const;
};

struct RunRecord {
  std::string algo, instance_kind;
  int S = 0, A = 0, O = 0, H = 0;
  std::int64_t seed = 0;
  long episodes_used = 0;
  std::string metric;
  double value = 0.0;

  std::string to_csv() const;
  static RunRecord from_csv(const std::string& line);
  bool operator==(const RunRecord& o) const = default;
};

inline constexpr const char* kCsvHeader =
    "algo,instance_kind,S,A,O,H,seed,episodes_used,metric,value";

// Instance i of base seed b is generated from seed b*1000 + i.
std::uint64_t instance_seed(std::uint64_t base, int index);

// Per-run rows use metric "value" (one per checkpoint) and "final_value";
// failed runs use "failed". Summary rows: "mean_final_value" and
// "std_final_value" per (base seed, algo), with population std.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

void write_csv(const std::string& path, const std::vector<RunRecord>& rows);
std::vector<RunRecord> read_csv(const std::string& path);

// One SVG per (instance_kind, S, A, O, H) case; returns the written paths.
std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& out_dir);

}  // namespace privrl

#endif  // PRIVRL_HARNESS_HPP_
