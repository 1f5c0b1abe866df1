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

#include "privrl/mdp_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace privrl {

double QTable::value(const std::vector<double>& mu1) const {
  double v0 = 0.0;
  for (int s = 0; s < S; ++s) v0 += mu1[s] * v(1, s);
  return v0;
}

StatePolicy QTable::greedy() const {
  std::vector<int> acts(static_cast<std::size_t>(H) * S, 0);
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) {
      int best = 0;
      for (int a = 1; a < A; ++a)
        if (q(h, s, a) > q(h, s, best)) best = a;
      acts[(h - 1) * S + s] = best;
    }
  return StatePolicy::deterministic(H, S, A, acts);
}

namespace {

QTable backup(const Mdp& mdp, const StatePolicy* pi) {
  QTable t;
  t.H = mdp.H;
  t.S = mdp.S;
  t.A = mdp.A;
  t.Q.assign(static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A, 0.0);
  t.V.assign(static_cast<std::size_t>(mdp.H + 1) * mdp.S, 0.0);
  for (int h = mdp.H; h >= 1; --h) {
    for (int s = 0; s < mdp.S; ++s) {
      double vbest = -1e300, vpi = 0.0;
      for (int a = 0; a < mdp.A; ++a) {
        double q = mdp.reward(h, s, a);
        const double* row = mdp.t_row(h, s, a);
        for (int sn = 0; sn < mdp.S; ++sn) q += row[sn] * t.V[static_cast<std::size_t>(h) * mdp.S + sn];
        t.Q[(static_cast<std::size_t>(h - 1) * mdp.S + s) * mdp.A + a] = q;
        vbest = std::max(vbest, q);
        if (pi) vpi += pi->row(h, s)[a] * q;
      }
      t.V[static_cast<std::size_t>(h - 1) * mdp.S + s] = pi ? vpi : vbest;
    }
  }
  return t;
}

}  // namespace

QTable value_iteration(const Mdp& mdp) { return backup(mdp, nullptr); }

QTable evaluate_state_policy(const Mdp& mdp, const StatePolicy& pi) { return backup(mdp, &pi); }

std::vector<std::vector<double>> occupancy(const Mdp& mdp, const StatePolicy& pi) {
  std::vector<std::vector<double>> d(mdp.H, std::vector<double>(mdp.S, 0.0));
  d[0] = mdp.mu1;
  for (int h = 1; h < mdp.H; ++h)
    for (int s = 0; s < mdp.S; ++s) {
      if (d[h - 1][s] == 0.0) continue;
      for (int a = 0; a < mdp.A; ++a) {
        double w = d[h - 1][s] * pi.row(h, s)[a];
        if (w == 0.0) continue;
        const double* row = mdp.t_row(h, s, a);
        for (int sn = 0; sn < mdp.S; ++sn) d[h][sn] += w * row[sn];
      }
    }
  return d;
}

double ucb_bonus(double c, int S, int A, int H, int K, double delta, long count) {
  double l = std::log(static_cast<double>(S) * A * H * std::max(K, 1) / delta);
  return c * std::sqrt(l / static_cast<double>(std::max(count, 1L)));
}

namespace {

struct Counts {
  int H, S, A;
  std::vector<long> sa, sas;
  Counts(int H_, int S_, int A_)
      : H(H_), S(S_), A(A_),
        sa(static_cast<std::size_t>(H_) * S_ * A_, 0),
        sas(static_cast<std::size_t>(H_) * S_ * A_ * S_, 0) {}
  std::size_t i(int h, int s, int a) const {
    return (static_cast<std::size_t>(h - 1) * S + s) * A + a;
  }
};

// Backward DP over steps 1..last on the empirical model, with or without
// optimism. Unvisited pairs use a uniform next-state row.
std::vector<int> plan(const Counts& n, const std::vector<double>& reward, int last,
                      double bonus_c, int K, double delta) {
  const int S = n.S, A = n.A;
  std::vector<double> vnext(S, 0.0), v(S, 0.0);
  std::vector<int> acts(static_cast<std::size_t>(n.H) * S, 0);
  for (int h = last; h >= 1; --h) {
    for (int s = 0; s < S; ++s) {
      double best = -1e300;
      int arg = 0;
      for (int a = 0; a < A; ++a) {
        std::size_t k = n.i(h, s, a);
        long c = n.sa[k];
        double q = reward[k];
        if (c == 0) {
          for (int sn = 0; sn < S; ++sn) q += vnext[sn] / S;
        } else {
          for (int sn = 0; sn < S; ++sn) q += vnext[sn] * n.sas[k * S + sn] / static_cast<double>(c);
        }
        if (bonus_c > 0.0) {
          q += ucb_bonus(bonus_c, S, A, n.H, K, delta, c);
          q = std::min(q, static_cast<double>(last - h + 1));
        }
        if (q > best) {
          best = q;
          arg = a;
        }
      }
      v[s] = best;
      acts[(h - 1) * S + s] = arg;
    }
    vnext.swap(v);
  }
  return acts;
}

}  // namespace

UcbViResult ucb_vi(const Mdp& env, const std::vector<double>& reward, int last_step,
                   const UcbViConfig& cfg, Rng& rng) {
  const int S = env.S, A = env.A;
  Counts n(env.H, S, A);
  for (int k = 0; k < cfg.episodes; ++k) {
    std::vector<int> acts = plan(n, reward, last_step, cfg.c, cfg.episodes, cfg.delta);
    int s = sample_categorical(env.mu1, rng);
    for (int h = 1; h <= last_step; ++h) {
      int a = acts[(h - 1) * S + s];
      int sn = sample_categorical(env.t_row(h, s, a), S, rng);
      std::size_t i = n.i(h, s, a);
      ++n.sa[i];
      ++n.sas[i * S + sn];
      s = sn;
    }
  }
  UcbViResult res;
  std::vector<int> acts = plan(n, reward, last_step, 0.0, cfg.episodes, cfg.delta);
  res.policy = StatePolicy::deterministic(env.H, S, A, acts);
  res.visits = n.sa;
  res.episodes_used = cfg.episodes;
  return res;
}

ReachResult reach_policy(const Mdp& env, int h, const std::vector<bool>& targets, int budget,
                         double delta, Rng& rng, double c) {
  if (budget <= 0) throw ModelError("reach budget must be positive");
  if (h < 1 || h > env.H) throw ModelError("reach step out of range");
  // Indicator reward 1[h' = h, s' in targets]; any action collects it.
  std::vector<double> reward(static_cast<std::size_t>(env.H) * env.S * env.A, 0.0);
  for (int s = 0; s < env.S; ++s)
    if (targets[s])
      for (int a = 0; a < env.A; ++a) reward[(static_cast<std::size_t>(h - 1) * env.S + s) * env.A + a] = 1.0;
  const int eval = budget / 4;
  const int learn = budget - eval;
  ReachResult res;
  UcbViConfig cfg{learn, delta, c};
  if (h == 1) {
    // Nothing to learn: s_1 ~ mu1 under every policy.
    res.policy = StatePolicy(env.H, env.S, env.A);
  } else {
    res.policy = ucb_vi(env, reward, h, cfg, rng).policy;
  }
  const int runs = h == 1 ? budget : (eval > 0 ? eval : learn);
  long hits = 0;
  std::vector<double> pi(env.A);
  for (int k = 0; k < runs; ++k) {
    int s = sample_categorical(env.mu1, rng);
    for (int t = 1; t < h; ++t) {
      int a = sample_categorical(res.policy.row(t, s), env.A, rng);
      s = sample_categorical(env.t_row(t, s, a), env.S, rng);
    }
    if (targets[s]) ++hits;
  }
  res.reach_estimate = static_cast<double>(hits) / runs;
  res.episodes_used = h == 1 ? budget : budget + (eval > 0 ? 0 : learn);
  return res;
}

ReachResult reach_policy(const Mdp& env, int h, int s, int budget, double delta, Rng& rng,
                         double c) {
  std::vector<bool> targets(env.S, false);
  targets[s] = true;
  return reach_policy(env, h, targets, budget, delta, rng, c);
}

}  // namespace privrl
