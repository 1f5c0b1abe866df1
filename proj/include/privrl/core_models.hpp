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

#ifndef PRIVRL_CORE_MODELS_HPP_
#define PRIVRL_CORE_MODELS_HPP_

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace privrl {

// Steps are 1-based (h = 1..H) in every API. States, actions and
// observations are 0-based. Serialized arrays index steps from 0.

using Rng = std::mt19937_64;
using Dist = std::vector<double>;

inline constexpr double kStochTol = 1e-9;
inline constexpr std::size_t kDefaultEnumCap = 1000000;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Uniform double in [0,1) built from the top 53 bits, so draws do not depend
// on the standard library's distribution implementations.
double uniform01(Rng& rng);
int sample_categorical(const double* p, int n, Rng& rng);
inline int sample_categorical(const Dist& p, Rng& rng) {
  return sample_categorical(p.data(), static_cast<int>(p.size()), rng);
}

struct Mdp {
  int H = 0, S = 0, A = 0;
  Dist mu1;  // S
  Dist T;    // H*S*A*S
  Dist r;    // H*S*A

  static Mdp zeros(int H, int S, int A);
  std::size_t t_index(int h, int s, int a) const {
    return ((static_cast<std::size_t>(h - 1) * S + s) * A + a) * S;
  }
  const double* t_row(int h, int s, int a) const { return &T[t_index(h, s, a)]; }
  double* t_row(int h, int s, int a) { return &T[t_index(h, s, a)]; }
  double& reward(int h, int s, int a) {
    return r[(static_cast<std::size_t>(h - 1) * S + s) * A + a];
  }
  double reward(int h, int s, int a) const {
    return r[(static_cast<std::size_t>(h - 1) * S + s) * A + a];
  }
};

struct Pomdp {
  int H = 0, S = 0, A = 0, O = 0;
  Dist mu1;  // S
  Dist T;    // H*S*A*S
  Dist Obs;  // H*S*O
  Dist r;    // H*S*A

  static Pomdp zeros(int H, int S, int A, int O);
  std::size_t t_index(int h, int s, int a) const {
    return ((static_cast<std::size_t>(h - 1) * S + s) * A + a) * S;
  }
  const double* t_row(int h, int s, int a) const { return &T[t_index(h, s, a)]; }
  double* t_row(int h, int s, int a) { return &T[t_index(h, s, a)]; }
  const double* obs_row(int h, int s) const {
    return &Obs[(static_cast<std::size_t>(h - 1) * S + s) * O];
  }
  double* obs_row(int h, int s) {
    return &Obs[(static_cast<std::size_t>(h - 1) * S + s) * O];
  }
  double& reward(int h, int s, int a) {
    return r[(static_cast<std::size_t>(h - 1) * S + s) * A + a];
  }
  double reward(int h, int s, int a) const {
    return r[(static_cast<std::size_t>(h - 1) * S + s) * A + a];
  }
};

enum class Sharing { kFull, kOneStepDelay };

// Partially observable stochastic game. `joint` carries the centralized
// dynamics over joint actions and joint observations; its reward array is
// unused. Agent 0 is the fastest-varying digit of every joint index.
struct Posg {
  int n = 0;
  std::vector<int> Ai, Oi;
  Pomdp joint;
  std::vector<Dist> ri;  // n arrays, H*S*A each
  Sharing sharing = Sharing::kFull;

  int H() const { return joint.H; }
  int S() const { return joint.S; }
  int A() const { return joint.A; }
  int O() const { return joint.O; }
  int action_of(int joint_a, int i) const;
  int obs_of(int joint_o, int i) const;
  int join_actions(const std::vector<int>& a) const;
  int join_obs(const std::vector<int>& o) const;
  double reward(int i, int h, int s, int a) const {
    return ri[i][(static_cast<std::size_t>(h - 1) * joint.S + s) * joint.A + a];
  }
  bool is_zero_sum(double tol = kStochTol) const;
};

// Builds a POSG whose joint sizes are the products of the per-agent sizes.
Posg make_posg(int H, int S, const std::vector<int>& Ai, const std::vector<int>& Oi,
               Sharing sharing);

struct ValidationIssue {
  std::string where;
  double deviation = 0.0;
};
using ValidationReport = std::vector<ValidationIssue>;

ValidationReport validate_model(const Mdp& m);
ValidationReport validate_model(const Pomdp& m);
ValidationReport validate_model(const Posg& g);

struct Trajectory {
  std::vector<int> s;  // s_1..s_{H+1}
  std::vector<int> o;  // o_1..o_H
  std::vector<int> a;  // a_1..a_H
  std::vector<double> rewards;
};

// Policies are key machines. A policy maps what it has seen into an integer
// key; the action distribution at step h depends on (h, key, s_h). States are
// passed to every call, history-only policies ignore them.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int num_actions() const = 0;
  virtual std::uint64_t init_key(int s1, int o1) const = 0;
  virtual std::uint64_t next_key(int h, std::uint64_t key, int a, int s_next,
                                 int o_next) const = 0;
  virtual void dist(int h, std::uint64_t key, int s, double* out) const = 0;
  // Upper bound on distinct keys per step, used for cap checks.
  virtual double key_space(int h) const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

class StatePolicy : public Policy {
 public:
  StatePolicy() = default;
  StatePolicy(int H, int S, int A);  // uniform
  static StatePolicy deterministic(int H, int S, int A, const std::vector<int>& acts);

  int H() const { return H_; }
  int S() const { return S_; }
  int num_actions() const override { return A_; }
  std::uint64_t init_key(int, int) const override { return 0; }
  std::uint64_t next_key(int, std::uint64_t, int, int, int) const override { return 0; }
  void dist(int h, std::uint64_t, int s, double* out) const override;
  double key_space(int) const override { return 1.0; }

  const double* row(int h, int s) const {
    return &p_[(static_cast<std::size_t>(h - 1) * S_ + s) * A_];
  }
  double* row(int h, int s) { return &p_[(static_cast<std::size_t>(h - 1) * S_ + s) * A_]; }

 private:
  int H_ = 0, S_ = 0, A_ = 0;
  Dist p_;
};

// Suffix of at most L (action, observation) pairs ending with o_h. When
// h <= L the leading action slot is empty (-1).
struct FiniteMemory {
  int L = 1;
  int h = 1;
  std::vector<int> actions;
  std::vector<int> obs;
};

// Integer codec for finite memories. The step h fixes the suffix length.
class MemoryCodec {
 public:
  MemoryCodec() = default;
  MemoryCodec(int L, int A, int O);
  int L() const { return L_; }
  int length(int h) const { return h < L_ ? h : L_; }
  std::uint64_t init(int o1) const;
  std::uint64_t next(int h, std::uint64_t key, int a, int o_next) const;
  std::uint64_t encode(const FiniteMemory& z) const;
  FiniteMemory decode(int h, std::uint64_t key) const;
  double count(int h) const;

 private:
  int L_ = 1, A_ = 1, O_ = 1;
  std::uint64_t base_ = 1, drop_ = 1;
};

FiniteMemory make_memory(int L, const std::vector<int>& obs, const std::vector<int>& acts);

class FiniteMemoryPolicy : public Policy {
 public:
  FiniteMemoryPolicy() = default;
  FiniteMemoryPolicy(int H, int A, int O, int L);

  int H() const { return H_; }
  int L() const { return codec_.L(); }
  int O() const { return O_; }
  const MemoryCodec& codec() const { return codec_; }
  int num_actions() const override { return A_; }
  std::uint64_t init_key(int, int o1) const override { return codec_.init(o1); }
  std::uint64_t next_key(int h, std::uint64_t key, int a, int, int o_next) const override {
    return codec_.next(h, key, a, o_next);
  }
  void dist(int h, std::uint64_t key, int s, double* out) const override;
  double key_space(int h) const override { return codec_.count(h); }

  // Missing rows act as uniform unless strict mode is on.
  void set_strict(bool strict) { strict_ = strict; }
  bool has_row(int h, std::uint64_t key) const;
  const Dist* find_row(int h, std::uint64_t key) const;
  void set_row(int h, std::uint64_t key, Dist row);
  const std::unordered_map<std::uint64_t, Dist>& rows(int h) const { return rows_[h - 1]; }

 private:
  int H_ = 0, A_ = 0, O_ = 0;
  MemoryCodec codec_;
  bool strict_ = false;
  std::vector<std::unordered_map<std::uint64_t, Dist>> rows_;
};

// Table over complete observation-action histories. With `with_states` the
// key also records the state sequence, which gives the general class of
// privileged history policies.
class FullHistoryPolicy : public Policy {
 public:
  FullHistoryPolicy() = default;
  FullHistoryPolicy(int H, int S, int A, int O, bool with_states = false);

  int num_actions() const override { return A_; }
  bool with_states() const { return with_states_; }
  std::uint64_t init_key(int s1, int o1) const override;
  std::uint64_t next_key(int h, std::uint64_t key, int a, int s_next, int o_next) const override;
  void dist(int h, std::uint64_t key, int s, double* out) const override;
  double key_space(int h) const override;

  void set_row(int h, std::uint64_t key, Dist row);
  const Dist* find_row(int h, std::uint64_t key) const;
  std::uint64_t key_of(const std::vector<int>& states, const std::vector<int>& obs,
                       const std::vector<int>& acts) const;

 private:
  int H_ = 0, S_ = 0, A_ = 0, O_ = 0;
  bool with_states_ = false;
  std::vector<std::unordered_map<std::uint64_t, Dist>> rows_;
};

// Uniform mixture; one member is drawn per episode.
class MixturePolicy : public Policy {
 public:
  explicit MixturePolicy(std::vector<PolicyPtr> members);
  const std::vector<PolicyPtr>& members() const { return members_; }
  int num_actions() const override;
  std::uint64_t init_key(int, int) const override;
  std::uint64_t next_key(int, std::uint64_t, int, int, int) const override;
  void dist(int, std::uint64_t, int, double*) const override;
  double key_space(int) const override;

 private:
  std::vector<PolicyPtr> members_;
};

Trajectory sample_episode(const Pomdp& model, const Policy& policy, Rng& rng);

double evaluate_policy_exact(const Pomdp& model, const Policy& policy,
                             std::size_t cap = kDefaultEnumCap);

Mdp mdp_of(const Pomdp& model);

// JSON model documents.
std::string to_json(const Pomdp& m);
std::string to_json(const Mdp& m);
std::string to_json(const Posg& g);

struct ModelDocument {
  std::string kind;  // pomdp | mdp | posg
  Pomdp pomdp;
  Mdp mdp;
  Posg posg;
};
ModelDocument parse_model_json(const std::string& text);
ModelDocument load_model_file(const std::string& path);

}  // namespace privrl

#endif  // PRIVRL_CORE_MODELS_HPP_
