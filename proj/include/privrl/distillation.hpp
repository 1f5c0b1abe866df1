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

#ifndef PRIVRL_DISTILLATION_HPP_
#define PRIVRL_DISTILLATION_HPP_

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "privrl/belief_engine.hpp"
#include "privrl/core_models.hpp"

namespace privrl {

struct FilterCheck {
  bool is_filter = true;
  std::vector<int> witness_obs;   // first history with a non one-hot belief
  std::vector<int> witness_acts;
  std::size_t histories = 0;
};

FilterCheck is_deterministic_filter(const Pomdp& model, std::size_t cap = kDefaultEnumCap);

// Step-1 entries are keyed by o_1, later steps by (s_{h-1}, a_{h-1}, o_h).
class DecoderTable {
 public:
  DecoderTable() = default;
  DecoderTable(int H, int S, int A, int O);

  int H() const { return H_; }
  int S() const { return S_; }
  int unknown() const { return S_; }
  // Returns the stored state or unknown().
  int lookup(int h, int s_prev, int a_prev, int o) const;
  // First write wins; a differing second write raises the conflict flag.
  void store(int h, int s_prev, int a_prev, int o, int s);
  bool conflict() const { return conflict_; }
  std::size_t size() const;
  std::string to_json() const;
  static DecoderTable from_json(const std::string& text, int H, int S, int A, int O);

 private:
  int key(int h, int s_prev, int a_prev, int o) const;
  int H_ = 0, S_ = 0, A_ = 0, O_ = 0;
  bool conflict_ = false;
  std::vector<std::unordered_map<int, int>> table_;
};

DecoderTable learn_decoders(const Pomdp& env, const StatePolicy& expert, int M, Rng& rng);

// Decodes recursively and acts with the expert. The key is the decoded
// state; unknown() is sticky and acts uniformly.
class DecodedPolicy : public Policy {
 public:
  DecodedPolicy(DecoderTable decoders, StatePolicy expert);
  int num_actions() const override { return expert_.num_actions(); }
  std::uint64_t init_key(int s1, int o1) const override;
  std::uint64_t next_key(int h, std::uint64_t key, int a, int s_next, int o_next) const override;
  void dist(int h, std::uint64_t key, int s, double* out) const override;
  double key_space(int) const override { return decoders_.S() + 1.0; }
  const DecoderTable& decoders() const { return decoders_; }

 private:
  DecoderTable decoders_;
  StatePolicy expert_;
};

DecodedPolicy compose_policy(const DecoderTable& decoders, const StatePolicy& expert);

enum class FailureMode { kExact, kMonteCarlo };

// P(exists h: g_h(s_{h-1}, a_{h-1}, o_h) != s_h) when the expert acts on the
// true state. Unknown keys count as failures.
double decode_failure_prob(const Pomdp& model, const StatePolicy& expert,
                           const DecoderTable& decoders, FailureMode mode = FailureMode::kExact,
                           int samples = 10000, Rng* rng = nullptr);

// f-divergence D_f(p || q) = sum_a q_a f(p_a / q_a). Forward KL uses the
// closed form; any other generator must pass a convexity check.
struct Divergence {
  enum class Kind { kForwardKL, kCustomF };
  Kind kind = Kind::kForwardKL;
  std::function<double(double)> f;
  std::string name = "kl";

  static Divergence forward_kl() { return {}; }
  static Divergence custom(std::function<double(double)> f, std::string name);
};

// Minimizer over the simplex of sum_s b(s) D(expert(.|s) || q).
Dist distill_row(const std::vector<Dist>& expert_rows, const Belief& b, const Divergence& div);

FullHistoryPolicy distill_expected_objective(const Pomdp& model, const StatePolicy& expert,
                                             const Policy& behavior,
                                             const Divergence& div = Divergence::forward_kl(),
                                             std::size_t cap = kDefaultEnumCap);

Pomdp counterexample_pomdp(double gamma, double eps);

}  // namespace privrl

#endif  // PRIVRL_DISTILLATION_HPP_
