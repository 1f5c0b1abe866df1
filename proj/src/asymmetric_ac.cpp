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

#include "privrl/asymmetric_ac.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace privrl {

double MemoryStateQ::q(int h, std::uint64_t key, int s, int a) const {
  const Dist* row = find(h, key);
  return row ? (*row)[static_cast<std::size_t>(s) * A + a] : 0.0;
}

const Dist* MemoryStateQ::find(int h, std::uint64_t key) const {
  auto it = table[h - 1].find(key);
  return it == table[h - 1].end() ? nullptr : &it->second;
}

std::string MemoryStateQ::to_json() const {
  nlohmann::json j;
  j["H"] = H;
  j["S"] = S;
  j["A"] = A;
  j["L"] = codec.L();
  nlohmann::json steps = nlohmann::json::array();
  for (int h = 1; h <= H; ++h) {
    nlohmann::json rows = nlohmann::json::object();
    for (auto key : keys[h - 1])
      if (const Dist* row = find(h, key)) rows[std::to_string(key)] = *row;
    steps.push_back(rows);
  }
  j["q"] = steps;
  return j.dump();
}

std::vector<std::vector<std::uint64_t>> enumerate_memory_keys(const MemoryCodec& codec, int H,
                                                              int A, int O, std::size_t cap) {
  std::size_t total = 0;
  for (int h = 1; h <= H; ++h) {
    double c = codec.count(h);
    if (c > static_cast<double>(cap)) throw CapExceeded("memory key count exceeds cap");
    total += static_cast<std::size_t>(c);
  }
  if (total > cap) throw CapExceeded("memory key count exceeds cap");
  std::vector<std::vector<std::uint64_t>> keys(H);
  for (int o = 0; o < O; ++o) keys[0].push_back(codec.init(o));
  for (int h = 1; h < H; ++h) {
    std::set<std::uint64_t> next;
    for (auto k : keys[h - 1])
      for (int a = 0; a < A; ++a)
        for (int o = 0; o < O; ++o) next.insert(codec.next(h, k, a, o));
    keys[h].assign(next.begin(), next.end());
  }
  return keys;
}

namespace {

// Transition/emission view used by the backward sweep. Rows may be
// sub-stochastic (all zero) for unvisited cells.
struct SweepModel {
  std::function<const double*(int, int, int)> t_row;
  std::function<const double*(int, int)> o_row;  // step h+1 emission
  std::function<double(int, int, int)> bonus_t;  // (h, s, a)
  std::function<double(int, int)> bonus_o;       // (h+1, s')
  bool clamp = false;
};

MemoryStateQ sweep(const Pomdp& m, const FiniteMemoryPolicy& policy, const SweepModel& sm,
                   std::size_t cap) {
  MemoryStateQ out;
  out.H = m.H;
  out.S = m.S;
  out.A = m.A;
  out.codec = policy.codec();
  out.keys = enumerate_memory_keys(out.codec, m.H, m.A, m.O, cap);
  out.table.assign(m.H, {});
  const int S = m.S, A = m.A, O = m.O;
  std::unordered_map<std::uint64_t, Dist> v_next, v_cur;
  Dist pi(A);
  for (int h = m.H; h >= 1; --h) {
    v_cur.clear();
    for (auto key : out.keys[h - 1]) {
      Dist row(static_cast<std::size_t>(S) * A, 0.0);
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          double q = m.reward(h, s, a);
          if (sm.bonus_t) q += sm.bonus_t(h, s, a);
          if (h < m.H) {
            const double* t = sm.t_row(h, s, a);
            for (int sn = 0; sn < S; ++sn) {
              if (t[sn] == 0.0) continue;
              double inner = sm.bonus_o ? sm.bonus_o(h + 1, sn) : 0.0;
              const double* e = sm.o_row(h + 1, sn);
              for (int o = 0; o < O; ++o) {
                if (e[o] == 0.0) continue;
                inner += e[o] * v_next.at(out.codec.next(h, key, a, o))[sn];
              }
              q += t[sn] * inner;
            }
          }
          if (sm.clamp) q = std::clamp(q, 0.0, static_cast<double>(m.H - h + 1));
          row[static_cast<std::size_t>(s) * A + a] = q;
        }
      Dist v(S, 0.0);
      for (int s = 0; s < S; ++s) {
        policy.dist(h, key, s, pi.data());
        for (int a = 0; a < A; ++a) v[s] += pi[a] * row[static_cast<std::size_t>(s) * A + a];
      }
      v_cur.emplace(key, std::move(v));
      out.table[h - 1].emplace(key, std::move(row));
    }
    v_next.swap(v_cur);
  }
  return out;
}

void check_policy(const Pomdp& m, const FiniteMemoryPolicy& policy) {
  if (policy.H() != m.H || policy.num_actions() != m.A || policy.O() != m.O)
    throw ModelError("policy sizes do not match the model");
}

}  // namespace

MemoryStateQ exact_q(const Pomdp& model, const FiniteMemoryPolicy& policy, std::size_t cap) {
  check_policy(model, policy);
  SweepModel sm;
  sm.t_row = [&](int h, int s, int a) { return model.t_row(h, s, a); };
  sm.o_row = [&](int h, int s) { return model.obs_row(h, s); };
  return sweep(model, policy, sm, cap);
}

MemoryStateQ optimistic_q(const Pomdp& env, const FiniteMemoryPolicy& policy,
                          const OptimisticQConfig& cfg, Rng& rng, OptimisticQCounts* counts) {
  check_policy(env, policy);
  if (cfg.M < 1) throw ModelError("M must be positive");
  const int H = env.H, S = env.S, A = env.A, O = env.O;
  const double delta1 = cfg.delta / (2.0 * S * (A + 1));
  const double log_term = std::log(1.0 / delta1);
  std::vector<long> n_sa(static_cast<std::size_t>(H) * S * A, 0);
  std::vector<long> n_sas(static_cast<std::size_t>(H) * S * A * S, 0);
  std::vector<long> n_s(static_cast<std::size_t>(H) * S, 0);
  std::vector<long> n_so(static_cast<std::size_t>(H) * S * O, 0);
  // Batch h only feeds the step-h counts.
  for (int h = H; h >= 1; --h) {
    for (int k = 0; k < cfg.M; ++k) {
      Trajectory tr = sample_episode(env, policy, rng);
      int s = tr.s[h - 1], a = tr.a[h - 1];
      std::size_t hs = static_cast<std::size_t>(h - 1) * S + s;
      ++n_s[hs];
      ++n_so[hs * O + tr.o[h - 1]];
      ++n_sa[hs * A + a];
      ++n_sas[(hs * A + a) * S + tr.s[h]];
    }
  }
  Dist t_hat(n_sas.size(), 0.0), o_hat(n_so.size(), 0.0);
  for (std::size_t k = 0; k < n_sa.size(); ++k)
    for (int sn = 0; sn < S; ++sn)
      t_hat[k * S + sn] = static_cast<double>(n_sas[k * S + sn]) / std::max(n_sa[k], 1L);
  for (std::size_t k = 0; k < n_s.size(); ++k)
    for (int o = 0; o < O; ++o)
      o_hat[k * O + o] = static_cast<double>(n_so[k * O + o]) / std::max(n_s[k], 1L);

  SweepModel sm;
  sm.clamp = true;
  sm.t_row = [&](int h, int s, int a) {
    return &t_hat[((static_cast<std::size_t>(h - 1) * S + s) * A + a) * S];
  };
  sm.o_row = [&](int h, int s) { return &o_hat[(static_cast<std::size_t>(h - 1) * S + s) * O]; };
  sm.bonus_t = [&](int h, int s, int a) {
    long n = n_sa[(static_cast<std::size_t>(h - 1) * S + s) * A + a];
    return H * std::min(2.0, cfg.C * std::sqrt(S * log_term / std::max(n, 1L)));
  };
  sm.bonus_o = [&](int h, int s) {
    long n = n_s[static_cast<std::size_t>(h - 1) * S + s];
    return H * std::min(2.0, cfg.C * std::sqrt(O * log_term / std::max(n, 1L)));
  };
  MemoryStateQ out = sweep(env, policy, sm, kDefaultEnumCap);
  out.C = cfg.C;
  out.delta1 = delta1;
  if (counts) {
    counts->n_sa = n_sa;
    counts->n_s = n_s;
    counts->episodes_used = static_cast<long>(H) * cfg.M;
  }
  return out;
}

std::size_t optimism_violations(const Pomdp& m, const FiniteMemoryPolicy& policy,
                                const MemoryStateQ& q, double tol) {
  const int S = m.S, A = m.A, O = m.O;
  Dist pi(A);
  auto v = [&](int h, std::uint64_t key, int s) {
    policy.dist(h, key, s, pi.data());
    double out = 0.0;
    for (int a = 0; a < A; ++a) out += pi[a] * q.q(h, key, s, a);
    return out;
  };
  std::size_t bad = 0;
  for (int h = 1; h <= m.H; ++h)
    for (auto key : q.keys[h - 1])
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          double rhs = m.reward(h, s, a);
          if (h < m.H) {
            const double* t = m.t_row(h, s, a);
            for (int sn = 0; sn < S; ++sn)
              for (int o = 0; o < O; ++o)
                rhs += t[sn] * m.obs_row(h + 1, sn)[o] * v(h + 1, q.codec.next(h, key, a, o), sn);
          }
          if (q.q(h, key, s, a) < rhs - tol) ++bad;
        }
  return bad;
}

FiniteMemoryPolicy mwu_update(const FiniteMemoryPolicy& prev, const MemoryStateQ& q,
                              const ApproxBeliefTable& belief, double eta) {
  if (eta < 0.0) throw ModelError("step size must be nonnegative");
  FiniteMemoryPolicy next = prev;
  const int A = q.A, S = q.S;
  Dist row(A), score(A);
  for (int h = 1; h <= q.H; ++h)
    for (auto key : q.keys[h - 1]) {
      const Belief* b = nullptr;
      try {
        b = &belief.get(h, key);
      } catch (const ImpossibleObservation&) {
        continue;  // unreachable memory: row unchanged
      }
      std::fill(score.begin(), score.end(), 0.0);
      for (int s = 0; s < S; ++s) {
        if ((*b)[s] == 0.0) continue;
        for (int a = 0; a < A; ++a) score[a] += (*b)[s] * q.q(h, key, s, a);
      }
      prev.dist(h, key, 0, row.data());
      double mx = -1e300;
      for (int a = 0; a < A; ++a)
        if (row[a] > 0.0) mx = std::max(mx, eta * score[a]);
      double z = 0.0;
      for (int a = 0; a < A; ++a) {
        row[a] = row[a] > 0.0 ? row[a] * std::exp(eta * score[a] - mx) : 0.0;
        z += row[a];
      }
      for (auto& x : row) x /= z;
      next.set_row(h, key, row);
    }
  return next;
}

MixturePolicy NpgResult::mixture() const {
  std::vector<PolicyPtr> members;
  for (auto& p : iterates) members.push_back(std::make_shared<FiniteMemoryPolicy>(p));
  return MixturePolicy(std::move(members));
}

double default_eta(int A, int T, int H) {
  return std::sqrt(std::log(static_cast<double>(A)) / (static_cast<double>(T) * H));
}

NpgResult belief_weighted_npg(const ApproxBeliefTable& belief, const QOracle& oracle, int T,
                              double eta) {
  if (T < 1) throw ModelError("T must be positive");
  const Pomdp& m = belief.model();
  NpgResult res;
  res.eta = eta;
  FiniteMemoryPolicy pi(m.H, m.A, m.O, belief.L());
  for (int t = 1; t <= T; ++t) {
    MemoryStateQ q = oracle(pi);
    pi = mwu_update(pi, q, belief, eta);
    res.iterates.push_back(pi);
  }
  return res;
}

NpgResult belief_weighted_npg(const Pomdp& env, const ApproxBeliefTable& belief, int T,
                              double eta, const OptimisticQConfig& cfg, Rng& rng) {
  long used = 0;
  QOracle oracle = [&](const FiniteMemoryPolicy& pi) {
    OptimisticQCounts c;
    MemoryStateQ q = optimistic_q(env, pi, cfg, rng, &c);
    used += c.episodes_used;
    return q;
  };
  NpgResult res = belief_weighted_npg(belief, oracle, T, eta);
  res.episodes_used = used;
  return res;
}

}  // namespace privrl
