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

#ifndef PRIVRL_MARL_HPP_
#define PRIVRL_MARL_HPP_

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "privrl/belief_engine.hpp"
#include "privrl/core_models.hpp"
#include "privrl/model_learning.hpp"

namespace privrl {

// ---------------------------------------------------------------------------
// Information structure
//
// Joint actions and observations use the Posg joint indices. Under full
// sharing the increments are w_1 = o_1 and w_{h+1} = (a_h, o_{h+1}); private
// information is empty. Under one-step delay c_1 is empty,
// w_{h+1} = (o_h, a_h) and p_{i,h} = o_{i,h}.

struct InfoState {
  int h = 1;
  // Full sharing: (a_{t-1} or -1, o_t). One-step delay: (o_t, a_t).
  std::vector<std::pair<int, int>> increments;
  std::vector<int> private_info;  // per agent, -1 when empty
};

InfoState info_split(const Posg& g, const std::vector<int>& obs, const std::vector<int>& acts);

// Length-L suffix codec for common information.
class CommonInfoCodec {
 public:
  CommonInfoCodec() = default;
  CommonInfoCodec(const Posg& g, int L);

  Sharing sharing() const { return sharing_; }
  int L() const { return L_; }
  int length(int h) const;  // increments kept in c^_h
  std::uint64_t init(int o1) const;
  // c^_{h+1} from c^_h after (o_h, a_h, o_{h+1}).
  std::uint64_t next(int h, std::uint64_t c, int o_h, int a_h, int o_next) const;
  std::uint64_t of_history(const std::vector<int>& obs, const std::vector<int>& acts) const;
  std::uint64_t encode(const InfoState& info) const;
  std::vector<std::pair<int, int>> decode(int h, std::uint64_t c) const;
  // Joint private information index: 0 under full sharing, o_h otherwise.
  int joint_private(int o_h) const { return sharing_ == Sharing::kFull ? 0 : o_h; }
  int num_joint_private() const { return sharing_ == Sharing::kFull ? 1 : O_; }
  int agent_private(const Posg& g, int p_joint, int i) const;
  int num_agent_private(const Posg& g, int i) const;
  std::vector<std::vector<std::uint64_t>> enumerate(int H, std::size_t cap) const;

 private:
  Sharing sharing_ = Sharing::kFull;
  int L_ = 1, A_ = 1, O_ = 1;
  MemoryCodec full_;
  std::uint64_t base_ = 1, drop_ = 1;
};

std::uint64_t compress_common(const Posg& g, const InfoState& info, int L);

// P^(s, p | c^) over states and joint private information, index s * P + p.
class CommonBelief {
 public:
  CommonBelief(const Posg& shape, Pomdp model, int L, std::vector<Belief> step_priors,
               bool reset_on_impossible);
  static CommonBelief exact(const Posg& g, int L);

  const Dist& get(int h, std::uint64_t c) const;
  const CommonInfoCodec& codec() const { return codec_; }
  int num_private() const { return codec_.num_joint_private(); }
  int S() const { return model_.S; }
  const Pomdp& model() const { return model_; }
  std::size_t reset_count() const;

 private:
  Dist compute(int h, std::uint64_t c) const;
  Pomdp model_;
  CommonInfoCodec codec_;
  std::vector<Belief> priors_;
  bool reset_;
  mutable std::mutex mu_;
  mutable std::vector<std::unordered_map<std::uint64_t, Dist>> memo_;
  mutable std::size_t resets_ = 0;
};

// P(s_h, p_h | c_h) by exact conditioning on the full history.
Dist exact_common_posterior(const Posg& g, const std::vector<int>& obs,
                            const std::vector<int>& acts);

struct PosgBeliefResult {
  EmpiricalModel counts;
  TruncatedModel truncated;
  CommonBelief belief;
};

// Treats the game as a centralized POMDP for exploration; every agent is a
// controller at every step.
PosgBeliefResult posg_belief_learning(const Posg& env, const ExploreConfig& cfg, double eps,
                                      int L, Rng& rng, bool known_mu1 = false);

// min{C3 (H-h) sqrt(O log(SAHK/delta) / max(N,1)), 2(H-h)}
double marl_bonus(long N, int h, int H, int S, int A, int O, int K, double delta, double C3);

// ---------------------------------------------------------------------------
// Bayesian games

enum class Concept { kNE, kCCE, kCE };
const char* concept_name(Concept c);

struct BayesianGame {
  int n = 0;
  std::vector<int> actions;  // per agent
  std::vector<int> types;    // per agent
  // Joint type p has agent-i component (p / prod_{j<i} types_j) % types_i;
  // joint actions follow the same convention.
  Dist prior;                        // over joint types
  std::vector<Dist> payoff;          // [i][p * A + a], conditional on p
  bool zero_sum = false;
  double payoff_range = 1.0;

  int num_joint_types() const;
  int num_joint_actions() const;
  int type_of(int p, int i) const;
  int action_of(int a, int i) const;
};

struct BayesianSolution {
  // rounds[t][i][type_i] is a distribution over A_i; the correlation device
  // draws one round uniformly.
  std::vector<std::vector<std::vector<Dist>>> rounds;
  std::vector<Dist> joint;                  // [p] -> distribution over joint actions
  std::vector<std::vector<Dist>> marginal;  // [i][type_i] -> averaged own strategy
};

BayesianSolution bayesian_solver(const BayesianGame& game, Concept kind, int R = 2000);

// Exact gap of the averaged correlated profile (NE and CCE share the
// unilateral-deviation formula).
double bayesian_gap(const BayesianGame& game, const BayesianSolution& sol, Concept kind);

// ---------------------------------------------------------------------------
// Joint policies

class JointPolicy {
 public:
  virtual ~JointPolicy() = default;
  // Distribution over joint actions at step h given the state and the joint
  // history (obs = o_1..o_h, acts = a_1..a_{h-1}). Implementations only read
  // what the agents are allowed to see.
  virtual void dist(int h, int s, const std::vector<int>& obs, const std::vector<int>& acts,
                    double* out) const = 0;
};

// Markov-game policy on the true state, stored as rounds of product
// policies so correlated experts keep their structure.
class MarkovExpert : public JointPolicy {
 public:
  MarkovExpert() = default;
  MarkovExpert(const Posg& g, std::vector<std::vector<Dist>> rounds);
  void dist(int h, int s, const std::vector<int>&, const std::vector<int>&,
            double* out) const override;
  const Dist& joint_row(int h, int s) const;  // averaged joint distribution
  const std::vector<std::vector<Dist>>& rounds() const { return rounds_; }
  // rounds_[t][i][(h-1)*S*Ai + s*Ai + a_i]
  double agent_prob(int t, int i, int h, int s, int a_i) const;
  int num_rounds() const { return static_cast<int>(rounds_.size()); }

 private:
  int H_ = 0, S_ = 0, A_ = 0;
  std::vector<int> Ai_;
  std::vector<std::vector<Dist>> rounds_;
  std::vector<Dist> joint_;  // (h-1)*S + s
};

// Backward induction with a stage-game solve per (h, s).
MarkovExpert markov_game_equilibrium(const Posg& g, Concept kind, int R = 2000);

// P(a | h, c^, p) tables, or the product of per-agent marginals.
class CommonInfoPolicy : public JointPolicy {
 public:
  CommonInfoPolicy() = default;
  CommonInfoPolicy(const Posg& g, CommonInfoCodec codec);
  void dist(int h, int s, const std::vector<int>& obs, const std::vector<int>& acts,
            double* out) const override;
  void dist_common(int h, std::uint64_t c, int p, double* out) const;
  // Stores the averaged joint and marginal tables of `sol`.
  void set(int h, std::uint64_t c, const BayesianSolution& sol);
  void set_use_marginals(bool on) { use_marginals_ = on; }
  bool use_marginals() const { return use_marginals_; }
  const CommonInfoCodec& codec() const { return codec_; }

 private:
  struct Entry {
    std::vector<Dist> joint;                  // [p]
    std::vector<std::vector<Dist>> marginal;  // [i][p_i]
  };
  std::vector<int> Ai_, Oi_;
  int A_ = 1;
  CommonInfoCodec codec_;
  bool use_marginals_ = false;
  std::vector<std::unordered_map<std::uint64_t, Entry>> table_;
};

Trajectory sample_posg_episode(const Posg& g, const JointPolicy& pi, Rng& rng);

// ---------------------------------------------------------------------------
// Optimistic common-information value iteration

struct OptimisticViConfig {
  int K = 1000;
  double delta = 0.1;
  double C3 = 2.0;
  Concept kind = Concept::kCCE;
  int R = 2000;
  bool select_max_over_agents = false;
};

struct OptimisticViResult {
  CommonInfoPolicy policy;
  int k_star = 0;                            // 1-based
  std::vector<std::vector<double>> v_high;   // [k][i] at the realized c_1
  std::vector<std::vector<double>> v_low;
  bool low_le_high = true;                   // Q^low <= Q^high on every entry
  bool within_clamps = true;                 // 0 <= Q^low, Q^high <= H-h+1
  long episodes_used = 0;
};

OptimisticViResult optimistic_vi(const Posg& env, const CommonBelief& belief,
                                 const OptimisticViConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Equilibrium gaps on enumerable games

struct GapReport {
  Concept kind = Concept::kNE;
  double gap = 0.0;
  std::vector<double> values;       // per agent under the policy
  std::vector<double> best_values;  // per agent under the best deviation found
  bool exhaustive = true;           // false: CE search was a local search
  std::string to_json() const;
};

struct GapOptions {
  std::size_t node_cap = kDefaultEnumCap;
  std::size_t ce_combo_cap = 1u << 16;
};

std::vector<double> joint_policy_values(const Posg& g, const JointPolicy& pi,
                                        std::size_t cap = kDefaultEnumCap);
GapReport equilibrium_gap(const Posg& g, const JointPolicy& pi, Concept kind,
                          const GapOptions& opts = {});

// ---------------------------------------------------------------------------
// Multi-agent decoding

// g_{j,h}(s | c_h, p_{j,h}) computed by exact conditioning in `model`, with a
// uniform fallback for histories the model rules out.
class DecoderPosterior {
 public:
  explicit DecoderPosterior(Posg model);
  Belief get(int j, int h, const std::vector<int>& obs, const std::vector<int>& acts) const;
  const Posg& model() const { return model_; }
  std::size_t fallback_count() const;

 private:
  Posg model_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, std::vector<int>>, Belief> memo_;
  mutable std::size_t fallbacks_ = 0;
};

struct DecoderConfig {
  int N = 1000;       // episodes per (h, s, i, joint action)
  int K_reach = 500;  // reach budget per (h, s, i)
  double delta = 0.1;
};

long decoder_theory_n(int O, int S, int H, int n, double delta, double eps);

struct MultiAgentDecoders {
  EmpiricalModel counts;
  DecoderPosterior decoders;
  long episodes_used = 0;
};

MultiAgentDecoders multi_agent_decoders(const Posg& env, const MarkovExpert& expert,
                                        const DecoderConfig& cfg, Concept kind, Rng& rng);

// Each agent samples its own decoded state and plays its expert component;
// rounds of a correlated expert share the common seed.
class DistilledJointPolicy : public JointPolicy {
 public:
  DistilledJointPolicy(const Posg& g, MarkovExpert expert, const DecoderPosterior* decoders);
  void dist(int h, int s, const std::vector<int>& obs, const std::vector<int>& acts,
            double* out) const override;

 private:
  int n_ = 0, S_ = 0, A_ = 0;
  std::vector<int> Ai_;
  MarkovExpert expert_;
  const DecoderPosterior* decoders_;
};

DistilledJointPolicy distill_equilibrium(const Posg& g, const MarkovExpert& expert,
                                         const DecoderPosterior& decoders);

// max_i max_{deviation of i} max_{j,h} P(s_h != g_j(c_h, p_j)) with the other
// agents following `base`. CE uses strategy modifications.
double max_decode_failure(const Posg& g, const JointPolicy& base,
                          const DecoderPosterior& decoders, Concept kind,
                          const GapOptions& opts = {});

}  // namespace privrl

#endif  // PRIVRL_MARL_HPP_
