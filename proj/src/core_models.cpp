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

#include "privrl/core_models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace privrl {

using json = nlohmann::json;

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int sample_categorical(const double* p, int n, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  int last = 0;
  for (int i = 0; i < n; ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

Mdp Mdp::zeros(int H, int S, int A) {
  Mdp m;
  m.H = H;
  m.S = S;
  m.A = A;
  m.mu1.assign(S, 0.0);
  m.T.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
  m.r.assign(static_cast<std::size_t>(H) * S * A, 0.0);
  return m;
}

Pomdp Pomdp::zeros(int H, int S, int A, int O) {
  Pomdp m;
  m.H = H;
  m.S = S;
  m.A = A;
  m.O = O;
  m.mu1.assign(S, 0.0);
  m.T.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
  m.Obs.assign(static_cast<std::size_t>(H) * S * O, 0.0);
  m.r.assign(static_cast<std::size_t>(H) * S * A, 0.0);
  return m;
}

// ---------------------------------------------------------------------------
// POSG index helpers

namespace {

int digit(int joint, const std::vector<int>& radix, int i) {
  for (int j = 0; j < i; ++j) joint /= radix[j];
  return joint % radix[i];
}

int join_digits(const std::vector<int>& d, const std::vector<int>& radix) {
  int out = 0, stride = 1;
  for (std::size_t j = 0; j < radix.size(); ++j) {
    out += d[j] * stride;
    stride *= radix[j];
  }
  return out;
}

}  // namespace

int Posg::action_of(int joint_a, int i) const { return digit(joint_a, Ai, i); }
int Posg::obs_of(int joint_o, int i) const { return digit(joint_o, Oi, i); }
int Posg::join_actions(const std::vector<int>& a) const { return join_digits(a, Ai); }
int Posg::join_obs(const std::vector<int>& o) const { return join_digits(o, Oi); }

bool Posg::is_zero_sum(double tol) const {
  if (n != 2) return false;
  for (std::size_t k = 0; k < ri[0].size(); ++k) {
    if (std::abs(ri[0][k] + ri[1][k] - 1.0) > tol) return false;
  }
  return true;
}

Posg make_posg(int H, int S, const std::vector<int>& Ai, const std::vector<int>& Oi,
               Sharing sharing) {
  if (Ai.size() != Oi.size() || Ai.empty()) throw ModelError("agent size lists differ");
  Posg g;
  g.n = static_cast<int>(Ai.size());
  g.Ai = Ai;
  g.Oi = Oi;
  int A = 1, O = 1;
  for (int i = 0; i < g.n; ++i) {
    A *= Ai[i];
    O *= Oi[i];
  }
  g.joint = Pomdp::zeros(H, S, A, O);
  g.ri.assign(g.n, Dist(static_cast<std::size_t>(H) * S * A, 0.0));
  g.sharing = sharing;
  return g;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_row(const double* p, int n, const std::string& where, ValidationReport& rep) {
  double sum = 0.0, worst_neg = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += p[i];
    if (!std::isfinite(p[i])) {
      rep.push_back({where + " non-finite entry", std::numeric_limits<double>::infinity()});
      return;
    }
    worst_neg = std::min(worst_neg, p[i]);
  }
  if (worst_neg < 0.0) rep.push_back({where + " negative entry", -worst_neg});
  if (std::abs(sum - 1.0) > kStochTol) rep.push_back({where + " sum", std::abs(sum - 1.0)});
}

std::string hsa(const char* what, int h, int s, int a) {
  std::ostringstream os;
  os << what << "(h=" << h << ",s=" << s << ",a=" << a << ")";
  return os.str();
}

std::string hs(const char* what, int h, int s) {
  std::ostringstream os;
  os << what << "(h=" << h << ",s=" << s << ")";
  return os.str();
}

void check_reward(double v, const std::string& where, ValidationReport& rep) {
  if (!std::isfinite(v)) {
    rep.push_back({where, std::numeric_limits<double>::infinity()});
  } else if (v < 0.0) {
    rep.push_back({where, -v});
  } else if (v > 1.0) {
    rep.push_back({where, v - 1.0});
  }
}

void check_sizes(int H, int S, int A, std::size_t mu, std::size_t t, std::size_t r,
                 ValidationReport& rep) {
  if (H <= 0 || S <= 0 || A <= 0) rep.push_back({"sizes nonpositive", 0.0});
  if (mu != static_cast<std::size_t>(S)) rep.push_back({"mu1 length", 0.0});
  if (t != static_cast<std::size_t>(H) * S * A * S) rep.push_back({"T length", 0.0});
  if (r != static_cast<std::size_t>(H) * S * A) rep.push_back({"r length", 0.0});
}

template <typename M>
void check_transitions(const M& m, ValidationReport& rep) {
  check_row(m.mu1.data(), m.S, "mu1", rep);
  for (int h = 1; h <= m.H; ++h)
    for (int s = 0; s < m.S; ++s)
      for (int a = 0; a < m.A; ++a) {
        check_row(m.t_row(h, s, a), m.S, hsa("T", h, s, a), rep);
        check_reward(m.reward(h, s, a), hsa("r", h, s, a), rep);
      }
}

}  // namespace

ValidationReport validate_model(const Mdp& m) {
  ValidationReport rep;
  check_sizes(m.H, m.S, m.A, m.mu1.size(), m.T.size(), m.r.size(), rep);
  if (!rep.empty()) return rep;
  check_transitions(m, rep);
  return rep;
}

ValidationReport validate_model(const Pomdp& m) {
  ValidationReport rep;
  check_sizes(m.H, m.S, m.A, m.mu1.size(), m.T.size(), m.r.size(), rep);
  if (m.O <= 0 || m.Obs.size() != static_cast<std::size_t>(m.H) * m.S * m.O)
    rep.push_back({"Obs length", 0.0});
  if (!rep.empty()) return rep;
  check_transitions(m, rep);
  for (int h = 1; h <= m.H; ++h)
    for (int s = 0; s < m.S; ++s) check_row(m.obs_row(h, s), m.O, hs("Obs", h, s), rep);
  return rep;
}

ValidationReport validate_model(const Posg& g) {
  ValidationReport rep;
  if (g.n <= 0 || static_cast<int>(g.Ai.size()) != g.n ||
      static_cast<int>(g.Oi.size()) != g.n || static_cast<int>(g.ri.size()) != g.n) {
    rep.push_back({"agent lists", 0.0});
    return rep;
  }
  int A = 1, O = 1;
  for (int i = 0; i < g.n; ++i) {
    A *= g.Ai[i];
    O *= g.Oi[i];
  }
  if (A != g.joint.A || O != g.joint.O) rep.push_back({"joint sizes", 0.0});
  ValidationReport inner = validate_model(g.joint);
  for (auto& v : inner) {
    if (v.where.rfind("r(", 0) == 0) continue;
    rep.push_back(v);
  }
  if (!rep.empty()) return rep;
  for (int i = 0; i < g.n; ++i) {
    if (g.ri[i].size() != g.joint.r.size()) {
      rep.push_back({"ri length", 0.0});
      continue;
    }
    for (int h = 1; h <= g.H(); ++h)
      for (int s = 0; s < g.S(); ++s)
        for (int a = 0; a < g.A(); ++a) {
          std::ostringstream os;
          os << "r" << i << "(h=" << h << ",s=" << s << ",a=" << a << ")";
          check_reward(g.reward(i, h, s, a), os.str(), rep);
        }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Policies

StatePolicy::StatePolicy(int H, int S, int A)
    : H_(H), S_(S), A_(A),
      p_(static_cast<std::size_t>(H) * S * A, 1.0 / static_cast<double>(A)) {}

StatePolicy StatePolicy::deterministic(int H, int S, int A, const std::vector<int>& acts) {
  StatePolicy p(H, S, A);
  std::fill(p.p_.begin(), p.p_.end(), 0.0);
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) p.row(h, s)[acts[(h - 1) * S + s]] = 1.0;
  return p;
}

void StatePolicy::dist(int h, std::uint64_t, int s, double* out) const {
  const double* r = row(h, s);
  std::copy(r, r + A_, out);
}

MemoryCodec::MemoryCodec(int L, int A, int O) : L_(L), A_(A), O_(O) {
  if (L < 1) throw ModelError("memory length must be at least 1");
  base_ = static_cast<std::uint64_t>(A + 1) * O;
  double bits = L * std::log2(static_cast<double>(base_));
  if (bits > 62.0) throw CapExceeded("memory key does not fit in 64 bits");
  drop_ = 1;
  for (int i = 0; i + 1 < L; ++i) drop_ *= base_;
}

std::uint64_t MemoryCodec::init(int o1) const { return static_cast<std::uint64_t>(o1); }

std::uint64_t MemoryCodec::next(int h, std::uint64_t key, int a, int o_next) const {
  if (length(h) == L_) key %= drop_;
  return key * base_ + static_cast<std::uint64_t>(a + 1) * O_ + o_next;
}

std::uint64_t MemoryCodec::encode(const FiniteMemory& z) const {
  std::uint64_t key = 0;
  for (std::size_t j = 0; j < z.obs.size(); ++j)
    key = key * base_ + static_cast<std::uint64_t>(z.actions[j] + 1) * O_ + z.obs[j];
  return key;
}

FiniteMemory MemoryCodec::decode(int h, std::uint64_t key) const {
  FiniteMemory z;
  z.L = L_;
  z.h = h;
  int len = length(h);
  z.actions.assign(len, -1);
  z.obs.assign(len, 0);
  for (int j = len - 1; j >= 0; --j) {
    auto d = key % base_;
    key /= base_;
    z.obs[j] = static_cast<int>(d % O_);
    z.actions[j] = static_cast<int>(d / O_) - 1;
  }
  return z;
}

double MemoryCodec::count(int h) const {
  double ao = static_cast<double>(A_) * O_;
  if (h <= L_) return O_ * std::pow(ao, h - 1);
  return std::pow(ao, L_);
}

FiniteMemory make_memory(int L, const std::vector<int>& obs, const std::vector<int>& acts) {
  FiniteMemory z;
  z.L = L;
  z.h = static_cast<int>(obs.size());
  int len = std::min(L, z.h);
  for (int j = 0; j < len; ++j) {
    int t = z.h - len + j;  // 0-based index of the observation
    z.obs.push_back(obs[t]);
    z.actions.push_back(t >= 1 ? acts[t - 1] : -1);
  }
  return z;
}

FiniteMemoryPolicy::FiniteMemoryPolicy(int H, int A, int O, int L)
    : H_(H), A_(A), O_(O), codec_(L, A, O), rows_(H) {}

void FiniteMemoryPolicy::dist(int h, std::uint64_t key, int, double* out) const {
  const Dist* row = find_row(h, key);
  if (row) {
    std::copy(row->begin(), row->end(), out);
    return;
  }
  if (strict_) {
    std::ostringstream os;
    os << "policy row missing at step " << h << " key " << key;
    throw ModelError(os.str());
  }
  std::fill(out, out + A_, 1.0 / A_);
}

bool FiniteMemoryPolicy::has_row(int h, std::uint64_t key) const {
  return rows_[h - 1].count(key) > 0;
}

const Dist* FiniteMemoryPolicy::find_row(int h, std::uint64_t key) const {
  auto it = rows_[h - 1].find(key);
  return it == rows_[h - 1].end() ? nullptr : &it->second;
}

void FiniteMemoryPolicy::set_row(int h, std::uint64_t key, Dist row) {
  rows_[h - 1][key] = std::move(row);
}

FullHistoryPolicy::FullHistoryPolicy(int H, int S, int A, int O, bool with_states)
    : H_(H), S_(S), A_(A), O_(O), with_states_(with_states), rows_(H) {
  if (key_space(H) > 9.0e18) throw CapExceeded("history key does not fit in 64 bits");
}

std::uint64_t FullHistoryPolicy::init_key(int s1, int o1) const {
  return with_states_ ? static_cast<std::uint64_t>(s1) * O_ + o1 : o1;
}

std::uint64_t FullHistoryPolicy::next_key(int, std::uint64_t key, int a, int s_next,
                                          int o_next) const {
  if (with_states_)
    return (key * A_ + a) * static_cast<std::uint64_t>(S_ * O_) +
           static_cast<std::uint64_t>(s_next) * O_ + o_next;
  return (key * A_ + a) * static_cast<std::uint64_t>(O_) + o_next;
}

double FullHistoryPolicy::key_space(int h) const {
  double step = with_states_ ? static_cast<double>(S_) * O_ : O_;
  return step * std::pow(step * A_, h - 1);
}

std::uint64_t FullHistoryPolicy::key_of(const std::vector<int>& states,
                                        const std::vector<int>& obs,
                                        const std::vector<int>& acts) const {
  std::uint64_t key = init_key(with_states_ ? states[0] : 0, obs[0]);
  for (std::size_t t = 1; t < obs.size(); ++t)
    key = next_key(static_cast<int>(t), key, acts[t - 1], with_states_ ? states[t] : 0, obs[t]);
  return key;
}

void FullHistoryPolicy::dist(int h, std::uint64_t key, int, double* out) const {
  const Dist* row = find_row(h, key);
  if (row) {
    std::copy(row->begin(), row->end(), out);
  } else {
    std::fill(out, out + A_, 1.0 / A_);
  }
}

void FullHistoryPolicy::set_row(int h, std::uint64_t key, Dist row) {
  rows_[h - 1][key] = std::move(row);
}

const Dist* FullHistoryPolicy::find_row(int h, std::uint64_t key) const {
  auto it = rows_[h - 1].find(key);
  return it == rows_[h - 1].end() ? nullptr : &it->second;
}

MixturePolicy::MixturePolicy(std::vector<PolicyPtr> members) : members_(std::move(members)) {
  if (members_.empty()) throw ModelError("empty mixture");
}

int MixturePolicy::num_actions() const { return members_.front()->num_actions(); }

std::uint64_t MixturePolicy::init_key(int, int) const {
  throw ModelError("mixture has no single key machine");
}
std::uint64_t MixturePolicy::next_key(int, std::uint64_t, int, int, int) const {
  throw ModelError("mixture has no single key machine");
}
void MixturePolicy::dist(int, std::uint64_t, int, double*) const {
  throw ModelError("mixture has no single key machine");
}
double MixturePolicy::key_space(int h) const {
  double m = 0.0;
  for (auto& p : members_) m = std::max(m, p->key_space(h));
  return m;
}

// ---------------------------------------------------------------------------
// Sampling and evaluation

Trajectory sample_episode(const Pomdp& model, const Policy& policy, Rng& rng) {
  if (auto* mix = dynamic_cast<const MixturePolicy*>(&policy)) {
    auto n = mix->members().size();
    auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
    return sample_episode(model, *mix->members()[std::min(pick, n - 1)], rng);
  }
  Trajectory tr;
  tr.s.reserve(model.H + 1);
  Dist pi(model.A);
  int s = sample_categorical(model.mu1, rng);
  int o = sample_categorical(model.obs_row(1, s), model.O, rng);
  std::uint64_t key = policy.init_key(s, o);
  tr.s.push_back(s);
  tr.o.push_back(o);
  for (int h = 1; h <= model.H; ++h) {
    policy.dist(h, key, s, pi.data());
    int a = sample_categorical(pi, rng);
    tr.a.push_back(a);
    tr.rewards.push_back(model.reward(h, s, a));
    int sn = sample_categorical(model.t_row(h, s, a), model.S, rng);
    tr.s.push_back(sn);
    if (h < model.H) {
      int on = sample_categorical(model.obs_row(h + 1, sn), model.O, rng);
      tr.o.push_back(on);
      key = policy.next_key(h, key, a, sn, on);
    }
    s = sn;
  }
  return tr;
}

double evaluate_policy_exact(const Pomdp& model, const Policy& policy, std::size_t cap) {
  if (auto* mix = dynamic_cast<const MixturePolicy*>(&policy)) {
    double v = 0.0;
    for (auto& m : mix->members()) v += evaluate_policy_exact(model, *m, cap);
    return v / static_cast<double>(mix->members().size());
  }
  if (dynamic_cast<const FullHistoryPolicy*>(&policy) &&
      policy.key_space(model.H) * model.A > static_cast<double>(cap))
    throw CapExceeded("history enumeration exceeds cap");

  const int S = model.S, A = model.A, O = model.O;
  std::unordered_map<std::uint64_t, Dist> cur, nxt;
  for (int s = 0; s < S; ++s) {
    if (model.mu1[s] <= 0.0) continue;
    for (int o = 0; o < O; ++o) {
      double p = model.mu1[s] * model.obs_row(1, s)[o];
      if (p <= 0.0) continue;
      auto& row = cur[policy.init_key(s, o)];
      if (row.empty()) row.assign(S, 0.0);
      row[s] += p;
    }
  }
  double value = 0.0;
  Dist pi(A);
  for (int h = 1; h <= model.H; ++h) {
    if (cur.size() > cap) throw CapExceeded("reachable key count exceeds cap");
    nxt.clear();
    for (auto& [key, mass] : cur) {
      for (int s = 0; s < S; ++s) {
        double m = mass[s];
        if (m <= 0.0) continue;
        policy.dist(h, key, s, pi.data());
        for (int a = 0; a < A; ++a) {
          if (pi[a] <= 0.0) continue;
          double ma = m * pi[a];
          value += ma * model.reward(h, s, a);
          if (h == model.H) continue;
          const double* t = model.t_row(h, s, a);
          for (int sn = 0; sn < S; ++sn) {
            if (t[sn] <= 0.0) continue;
            const double* ob = model.obs_row(h + 1, sn);
            for (int o = 0; o < O; ++o) {
              if (ob[o] <= 0.0) continue;
              auto& row = nxt[policy.next_key(h, key, a, sn, o)];
              if (row.empty()) row.assign(S, 0.0);
              row[sn] += ma * t[sn] * ob[o];
            }
          }
        }
      }
    }
    cur.swap(nxt);
  }
  return value;
}

Mdp mdp_of(const Pomdp& model) {
  Mdp m;
  m.H = model.H;
  m.S = model.S;
  m.A = model.A;
  m.mu1 = model.mu1;
  m.T = model.T;
  m.r = model.r;
  return m;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json nest_t(const Dist& T, int H, int S, int A) {
  json out = json::array();
  for (int h = 0; h < H; ++h) {
    json hj = json::array();
    for (int s = 0; s < S; ++s) {
      json sj = json::array();
      for (int a = 0; a < A; ++a) {
        auto b = T.begin() + ((static_cast<std::size_t>(h) * S + s) * A + a) * S;
        sj.push_back(std::vector<double>(b, b + S));
      }
      hj.push_back(sj);
    }
    out.push_back(hj);
  }
  return out;
}

json nest_3(const Dist& x, int H, int S, int K) {
  json out = json::array();
  for (int h = 0; h < H; ++h) {
    json hj = json::array();
    for (int s = 0; s < S; ++s) {
      auto b = x.begin() + (static_cast<std::size_t>(h) * S + s) * K;
      hj.push_back(std::vector<double>(b, b + K));
    }
    out.push_back(hj);
  }
  return out;
}

Dist flat_t(const json& j, int H, int S, int A) {
  Dist out;
  out.reserve(static_cast<std::size_t>(H) * S * A * S);
  if (static_cast<int>(j.size()) != H) throw ModelError("T has wrong step count");
  for (auto& hj : j) {
    if (static_cast<int>(hj.size()) != S) throw ModelError("T has wrong state count");
    for (auto& sj : hj) {
      if (static_cast<int>(sj.size()) != A) throw ModelError("T has wrong action count");
      for (auto& row : sj) {
        if (static_cast<int>(row.size()) != S) throw ModelError("T row has wrong length");
        for (auto& v : row) out.push_back(v.get<double>());
      }
    }
  }
  return out;
}

Dist flat_3(const json& j, int H, int S, int K, const char* name) {
  Dist out;
  if (static_cast<int>(j.size()) != H) throw ModelError(std::string(name) + " step count");
  for (auto& hj : j) {
    if (static_cast<int>(hj.size()) != S) throw ModelError(std::string(name) + " state count");
    for (auto& row : hj) {
      if (static_cast<int>(row.size()) != K) throw ModelError(std::string(name) + " row length");
      for (auto& v : row) out.push_back(v.get<double>());
    }
  }
  return out;
}

json pomdp_json(const Pomdp& m, const char* kind) {
  json j;
  j["kind"] = kind;
  j["H"] = m.H;
  j["S"] = m.S;
  j["A"] = m.A;
  j["O"] = m.O;
  j["mu1"] = m.mu1;
  j["T"] = nest_t(m.T, m.H, m.S, m.A);
  j["Obs"] = nest_3(m.Obs, m.H, m.S, m.O);
  j["r"] = nest_3(m.r, m.H, m.S, m.A);
  return j;
}

Pomdp pomdp_from(const json& j) {
  Pomdp m;
  m.H = j.at("H").get<int>();
  m.S = j.at("S").get<int>();
  m.A = j.at("A").get<int>();
  m.O = j.at("O").get<int>();
  if (m.H <= 0 || m.S <= 0 || m.A <= 0 || m.O <= 0) throw ModelError("sizes must be positive");
  m.mu1 = j.at("mu1").get<Dist>();
  m.T = flat_t(j.at("T"), m.H, m.S, m.A);
  m.Obs = flat_3(j.at("Obs"), m.H, m.S, m.O, "Obs");
  m.r = flat_3(j.at("r"), m.H, m.S, m.A, "r");
  return m;
}

}  // namespace

std::string to_json(const Pomdp& m) { return pomdp_json(m, "pomdp").dump(); }

std::string to_json(const Mdp& m) {
  json j;
  j["kind"] = "mdp";
  j["H"] = m.H;
  j["S"] = m.S;
  j["A"] = m.A;
  j["mu1"] = m.mu1;
  j["T"] = nest_t(m.T, m.H, m.S, m.A);
  j["r"] = nest_3(m.r, m.H, m.S, m.A);
  return j.dump();
}

std::string to_json(const Posg& g) {
  json j = pomdp_json(g.joint, "posg");
  j.erase("r");
  j["n"] = g.n;
  j["Ai"] = g.Ai;
  j["Oi"] = g.Oi;
  json ri = json::array();
  for (auto& r : g.ri) ri.push_back(nest_3(r, g.H(), g.S(), g.A()));
  j["ri"] = ri;
  j["sharing"] = g.sharing == Sharing::kFull ? "full" : "one_step_delay";
  return j.dump();
}

ModelDocument parse_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed JSON: ") + e.what());
  }
  ModelDocument doc;
  try {
    doc.kind = j.at("kind").get<std::string>();
    if (doc.kind == "pomdp") {
      doc.pomdp = pomdp_from(j);
    } else if (doc.kind == "mdp") {
      json k = j;
      k["O"] = 1;
      json obs = json::array();
      int H = j.at("H").get<int>(), S = j.at("S").get<int>();
      for (int h = 0; h < H; ++h) {
        json hj = json::array();
        for (int s = 0; s < S; ++s) hj.push_back(std::vector<double>{1.0});
        obs.push_back(hj);
      }
      k["Obs"] = obs;
      Pomdp p = pomdp_from(k);
      doc.mdp = mdp_of(p);
    } else if (doc.kind == "posg") {
      json k = j;
      int H = j.at("H").get<int>(), S = j.at("S").get<int>(), A = j.at("A").get<int>();
      std::string sharing = j.at("sharing").get<std::string>();
      Sharing sh;
      if (sharing == "full") {
        sh = Sharing::kFull;
      } else if (sharing == "one_step_delay") {
        sh = Sharing::kOneStepDelay;
      } else {
        throw ModelError("unsupported sharing pattern: " + sharing);
      }
      Posg g = make_posg(H, S, j.at("Ai").get<std::vector<int>>(),
                         j.at("Oi").get<std::vector<int>>(), sh);
      if (g.A() != A || g.O() != j.at("O").get<int>())
        throw ModelError("joint sizes disagree with per-agent sizes");
      k["r"] = nest_3(Dist(static_cast<std::size_t>(H) * S * A, 0.0), H, S, A);
      g.joint = pomdp_from(k);
      auto& ri = j.at("ri");
      if (static_cast<int>(ri.size()) != g.n) throw ModelError("ri agent count");
      for (int i = 0; i < g.n; ++i) g.ri[i] = flat_3(ri[i], H, S, A, "ri");
      doc.posg = std::move(g);
    } else {
      throw ModelError("unknown model kind: " + doc.kind);
    }
  } catch (const json::exception& e) {
    throw ModelError(std::string("bad model document: ") + e.what());
  }
  return doc;
}

ModelDocument load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model_json(ss.str());
}

}  // namespace privrl
