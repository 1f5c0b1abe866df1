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

// Brute-force reference computations shared by the tests. They enumerate
// raw state/observation/action sequences and avoid the library's recursions.

#ifndef PRIVRL_TESTS_ORACLES_HPP_
#define PRIVRL_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "privrl/asymmetric_ac.hpp"
#include "privrl/core_models.hpp"
#include "privrl/harness.hpp"

namespace oracle {

using privrl::Dist;
using privrl::Pomdp;

// P(s_h | o_1..o_h, a_1..a_{h-1}) by summing over all state sequences,
// optionally starting at step t0 from `prior` (conditioning on o_t0..o_h).
inline Dist posterior(const Pomdp& m, const std::vector<int>& obs, const std::vector<int>& acts,
                      int t0 = 1, const Dist& prior = {}) {
  const int h = static_cast<int>(obs.size());
  const int S = m.S;
  Dist out(S, 0.0);
  std::vector<int> states(h + 1);
  std::function<void(int, double)> rec = [&](int t, double w) {
    if (w == 0.0) return;
    if (t > h) {
      out[states[h]] += w;
      return;
    }
    for (int s = 0; s < S; ++s) {
      double p;
      if (t == t0) {
        p = prior.empty() ? m.mu1[s] : prior[s];
      } else {
        p = m.t_row(t - 1, states[t - 1], acts[t - 2])[s];
      }
      states[t] = s;
      rec(t + 1, w * p * m.obs_row(t, s)[obs[t - 1]]);
    }
  };
  rec(t0, 1.0);
  double z = 0.0;
  for (double x : out) z += x;
  for (double& x : out) x /= z;
  return out;
}

// Probability of an observation/action history (actions weighted by pi_fn).
inline double history_prob(const Pomdp& m, const std::vector<int>& obs, const std::vector<int>& acts) {
  const int h = static_cast<int>(obs.size());
  double total = 0.0;
  std::vector<int> states(h + 1);
  std::function<void(int, double)> rec = [&](int t, double w) {
    if (w == 0.0) return;
    if (t > h) {
      total += w;
      return;
    }
    for (int s = 0; s < m.S; ++s) {
      double p = t == 1 ? m.mu1[s] : m.t_row(t - 1, states[t - 1], acts[t - 2])[s];
      states[t] = s;
      rec(t + 1, w * p * m.obs_row(t, s)[obs[t - 1]]);
    }
  };
  rec(1, 1.0);
  return total;
}

// All histories (o_1..o_h, a_1..a_{h-1}) of positive probability.
inline std::vector<std::pair<std::vector<int>, std::vector<int>>> reachable_histories(
    const Pomdp& m, int h) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  std::vector<int> o(h), a(h > 0 ? h - 1 : 0);
  std::function<void(int)> rec = [&](int t) {
    if (t == h) {
      if (history_prob(m, o, a) > 1e-14) out.push_back({o, a});
      return;
    }
    for (int x = 0; x < m.O; ++x) {
      o[t] = x;
      if (t == 0) {
        rec(t + 1);
        continue;
      }
      for (int y = 0; y < m.A; ++y) {
        a[t - 1] = y;
        rec(t + 1);
      }
    }
  };
  rec(0);
  return out;
}

// Expected return of a key-machine policy by explicit trajectory recursion.
inline double value_by_enumeration(const Pomdp& m, const privrl::Policy& pi) {
  double total = 0.0;
  Dist row(m.A);
  std::function<void(int, int, std::uint64_t, double)> rec = [&](int h, int s, std::uint64_t key,
                                                                  double w) {
    Dist d(m.A);
    pi.dist(h, key, s, d.data());
    for (int a = 0; a < m.A; ++a) {
      double pa = w * d[a];
      if (pa == 0.0) continue;
      total += pa * m.reward(h, s, a);
      if (h == m.H) continue;
      for (int sn = 0; sn < m.S; ++sn)
        for (int o = 0; o < m.O; ++o) {
          double p = pa * m.t_row(h, s, a)[sn] * m.obs_row(h + 1, sn)[o];
          if (p > 0.0) rec(h + 1, sn, pi.next_key(h, key, a, sn, o), p);
        }
    }
  };
  for (int s = 0; s < m.S; ++s)
    for (int o = 0; o < m.O; ++o) {
      double p = m.mu1[s] * m.obs_row(1, s)[o];
      if (p > 0.0) rec(1, s, pi.init_key(s, o), p);
    }
  return total;
}

inline privrl::FiniteMemoryPolicy random_memory_policy(int H, int A, int O, int L,
                                                       std::uint64_t seed) {
  privrl::FiniteMemoryPolicy pi(H, A, O, L);
  privrl::Rng rng(seed);
  auto keys = privrl::enumerate_memory_keys(pi.codec(), H, A, O);
  for (int h = 1; h <= H; ++h)
    for (auto k : keys[h - 1]) {
      Dist row(A);
      double z = 0.0;
      for (auto& x : row) z += (x = -std::log1p(-privrl::uniform01(rng)));
      for (auto& x : row) x /= z;
      pi.set_row(h, k, row);
    }
  return pi;
}

inline double linf(const Dist& a, const Dist& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

inline double l1(const Dist& a, const Dist& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

inline double sum(const Dist& a) {
  double z = 0.0;
  for (double x : a) z += x;
  return z;
}

// Exhaustive max over every deterministic L-memory policy; also reports the
// number of policies evaluated.
inline double brute_force_memory(const privrl::Pomdp& m, int L, std::size_t* count = nullptr) {
  privrl::FiniteMemoryPolicy shape(m.H, m.A, m.O, L);
  auto keys = privrl::enumerate_memory_keys(shape.codec(), m.H, m.A, m.O);
  std::vector<std::pair<int, std::uint64_t>> slots;
  for (int h = 1; h <= m.H; ++h)
    for (auto k : keys[h - 1]) slots.push_back({h, k});
  double best = -1.0;
  std::size_t n = 0;
  std::vector<int> choice(slots.size(), 0);
  while (true) {
    privrl::FiniteMemoryPolicy pi(m.H, m.A, m.O, L);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      Dist row(m.A, 0.0);
      row[choice[i]] = 1.0;
      pi.set_row(slots[i].first, slots[i].second, row);
    }
    best = std::max(best, privrl::evaluate_policy_exact(m, pi));
    ++n;
    std::size_t i = 0;
    while (i < choice.size() && ++choice[i] == m.A) choice[i++] = 0;
    if (i == choice.size()) break;
  }
  if (count) *count = n;
  return best;
}

}  // namespace oracle

#endif  // PRIVRL_TESTS_ORACLES_HPP_
