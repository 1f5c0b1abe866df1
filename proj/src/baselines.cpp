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

#include "privrl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace privrl {

Dist project_simplex(const Dist& v) {
  const std::size_t n = v.size();
  Dist u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cum += u[j];
    double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  Dist out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = std::max(v[j] - theta, 0.0);
  return out;
}

double epsilon_schedule(int H, long t) {
  return static_cast<double>(H + 1) / static_cast<double>(H + t);
}

namespace {

// Sparse critic over (h, memory key) -> S*A values.
struct SparseQ {
  int S, A;
  std::vector<std::unordered_map<std::uint64_t, Dist>> t;
  SparseQ(int H, int S_, int A_) : S(S_), A(A_), t(H) {}
  double get(int h, std::uint64_t key, int s, int a) const {
    auto it = t[h - 1].find(key);
    return it == t[h - 1].end() ? 0.0 : it->second[s * A + a];
  }
  double& at(int h, std::uint64_t key, int s, int a) {
    auto& row = t[h - 1][key];
    if (row.empty()) row.assign(static_cast<std::size_t>(S) * A, 0.0);
    return row[s * A + a];
  }
  std::size_t size() const {
    std::size_t n = 0;
    for (auto& m : t) n += m.size();
    return n;
  }
};

std::vector<std::uint64_t> memory_keys(const FiniteMemoryPolicy& pi, const Trajectory& tr) {
  const int H = pi.H();
  std::vector<std::uint64_t> keys(H);
  keys[0] = pi.init_key(tr.s[0], tr.o[0]);
  for (int h = 1; h < H; ++h) keys[h] = pi.next_key(h, keys[h - 1], tr.a[h - 1], tr.s[h], tr.o[h]);
  return keys;
}

}  // namespace

VanillaAacResult vanilla_aac(const Pomdp& env, const VanillaAacConfig& cfg, Rng& rng) {
  if (cfg.T < 1 || cfg.K < 1) throw ModelError("iterations and episodes must be positive");
  const int H = env.H, S = env.S, A = env.A;
  VanillaAacResult res;
  res.policy = FiniteMemoryPolicy(H, A, env.O, cfg.L);
  SparseQ critic(H, S, A);
  std::vector<Trajectory> batch(cfg.K);
  std::vector<std::vector<std::uint64_t>> keys(cfg.K);
  Dist next_pi(A);
  for (int it = 0; it < cfg.T; ++it) {
    for (int k = 0; k < cfg.K; ++k) {
      batch[k] = sample_episode(env, res.policy, rng);
      keys[k] = memory_keys(res.policy, batch[k]);
    }
    res.episodes_used += cfg.K;
    // Critic: TD targets averaged per sampled cell, backward in h.
    for (int h = H; h >= 1; --h) {
      std::map<std::tuple<std::uint64_t, int, int>, std::pair<double, int>> targets;
      for (int k = 0; k < cfg.K; ++k) {
        const Trajectory& tr = batch[k];
        double target = tr.rewards[h - 1];
        if (h < H) {
          res.policy.dist(h + 1, keys[k][h], tr.s[h], next_pi.data());
          for (int a = 0; a < A; ++a) target += next_pi[a] * critic.get(h + 1, keys[k][h], tr.s[h], a);
        }
        auto& acc = targets[{keys[k][h - 1], tr.s[h - 1], tr.a[h - 1]}];
        acc.first += target;
        acc.second += 1;
      }
      for (auto& [cell, acc] : targets) {
        double& q = critic.at(h, std::get<0>(cell), std::get<1>(cell), std::get<2>(cell));
        q = (1.0 - cfg.alpha) * q + cfg.alpha * acc.first / acc.second;
      }
    }
    // Actor: projected step along the sampled log-policy gradient.
    std::map<std::pair<int, std::uint64_t>, Dist> grads;
    for (int k = 0; k < cfg.K; ++k) {
      const Trajectory& tr = batch[k];
      for (int h = 1; h <= H; ++h) {
        std::uint64_t key = keys[k][h - 1];
        Dist& g = grads[{h, key}];
        if (g.empty()) g.assign(A, 0.0);
        res.policy.dist(h, key, tr.s[h - 1], next_pi.data());
        int a = tr.a[h - 1];
        g[a] += critic.get(h, key, tr.s[h - 1], a) / std::max(next_pi[a], 1e-12);
      }
    }
    std::size_t updates = 0;
    for (auto& [hk, g] : grads) {
      Dist row(A);
      res.policy.dist(hk.first, hk.second, 0, row.data());
      for (int a = 0; a < A; ++a) row[a] += cfg.lambda / cfg.K * g[a];
      res.policy.set_row(hk.first, hk.second, project_simplex(row));
      ++updates;
    }
    res.actor_updates.push_back(updates);
    res.sampled_keys.push_back(grads.size());
  }
  res.critic_entries = critic.size();
  return res;
}

QLearningResult asymmetric_q_learning(const Pomdp& env, const QLearningConfig& cfg, Rng& rng) {
  if (cfg.episodes < 1) throw ModelError("episode budget must be positive");
  const int H = env.H, S = env.S, A = env.A;
  QLearningResult res;
  res.policy = FiniteMemoryPolicy(H, A, env.O, cfg.L);
  const MemoryCodec& codec = res.policy.codec();
  SparseQ q(H, S, A);
  std::vector<std::unordered_map<std::uint64_t, std::vector<long>>> visits(H);
  std::vector<int> s(H + 1), a(H), o(H);
  std::vector<std::uint64_t> z(H);
  for (long t = 1; t <= cfg.episodes; ++t) {
    const double eps = epsilon_schedule(H, t);
    s[0] = sample_categorical(env.mu1, rng);
    o[0] = sample_categorical(env.obs_row(1, s[0]), env.O, rng);
    z[0] = codec.init(o[0]);
    for (int h = 1; h <= H; ++h) {
      auto& v = visits[h - 1][z[h - 1]];
      if (v.empty()) v.assign(S, 0);
      ++v[s[h - 1]];
      if (uniform01(rng) < eps) {
        a[h - 1] = static_cast<int>(uniform01(rng) * A);
      } else {
        int best = 0;
        for (int b = 1; b < A; ++b)
          if (q.get(h, z[h - 1], s[h - 1], b) > q.get(h, z[h - 1], s[h - 1], best)) best = b;
        a[h - 1] = best;
      }
      s[h] = sample_categorical(env.t_row(h, s[h - 1], a[h - 1]), S, rng);
      if (h < H) {
        o[h] = sample_categorical(env.obs_row(h + 1, s[h]), env.O, rng);
        z[h] = codec.next(h, z[h - 1], a[h - 1], o[h]);
      }
    }
    for (int h = H; h >= 1; --h) {
      double target = env.reward(h, s[h - 1], a[h - 1]);
      if (h < H) {
        double m = q.get(h + 1, z[h], s[h], 0);
        for (int b = 1; b < A; ++b) m = std::max(m, q.get(h + 1, z[h], s[h], b));
        target += m;
      }
      double& cell = q.at(h, z[h - 1], s[h - 1], a[h - 1]);
      cell = (1.0 - cfg.alpha) * cell + cfg.alpha * target;
      ++res.updates;
    }
  }
  res.episodes_used = cfg.episodes;
  // Greedy extraction on Q averaged over states by visitation.
  for (int h = 1; h <= H; ++h)
    for (auto& [key, v] : visits[h - 1]) {
      long total = std::accumulate(v.begin(), v.end(), 0L);
      Dist score(A, 0.0);
      for (int st = 0; st < S; ++st)
        for (int b = 0; b < A; ++b) score[b] += v[st] * q.get(h, key, st, b) / total;
      int best = static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
      Dist row(A, 0.0);
      row[best] = 1.0;
      res.policy.set_row(h, key, row);
    }
  res.critic_entries = q.size();
  return res;
}

}  // namespace privrl
