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

#include "privrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"
#include "privrl/asymmetric_ac.hpp"
#include "privrl/baselines.hpp"
#include "privrl/distillation.hpp"
#include "privrl/mdp_oracle.hpp"
#include "privrl/model_learning.hpp"

namespace privrl {

namespace {

void dirichlet1(double* out, int n, Rng& rng) {
  double z = 0.0;
  for (int k = 0; k < n; ++k) z += (out[k] = -std::log1p(-uniform01(rng)));
  for (int k = 0; k < n; ++k) out[k] /= z;
}

void one_hot(double* out, int n, int k) {
  std::fill(out, out + n, 0.0);
  out[k] = 1.0;
}

int uniform_int(int n, Rng& rng) {
  return std::min(n - 1, static_cast<int>(uniform01(rng) * n));
}

// Random assignment of observations to states with every block non-empty.
std::vector<int> block_partition(int S, int O, Rng& rng) {
  std::vector<int> order(O);
  std::iota(order.begin(), order.end(), 0);
  for (int k = O - 1; k > 0; --k) std::swap(order[k], order[uniform_int(k + 1, rng)]);
  std::vector<int> owner(O);
  for (int k = 0; k < O; ++k) owner[order[k]] = k < S ? k : uniform_int(S, rng);
  return owner;
}

void block_row(double* out, int O, const std::vector<int>& owner, int s, Rng& rng) {
  std::vector<double> w(O, 0.0);
  double z = 0.0;
  for (int o = 0; o < O; ++o)
    if (owner[o] == s) z += (w[o] = -std::log1p(-uniform01(rng)));
  for (int o = 0; o < O; ++o) out[o] = w[o] / z;
}

void check_sizes(int S, int A, int O, int H) {
  if (S < 1 || A < 1 || O < 1 || H < 1) throw ModelError("sizes must be positive");
}

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

// ---------------------------------------------------------------------------
// Instance generators

InstanceKind parse_instance_kind(const std::string& name) {
  if (name == "generic") return InstanceKind::kGeneric;
  if (name == "deterministic_transition") return InstanceKind::kDeterministicTransition;
  if (name == "block_mdp") return InstanceKind::kBlockMdp;
  throw ModelError("unknown instance kind: " + name);
}

const char* instance_kind_name(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::kGeneric: return "generic";
    case InstanceKind::kDeterministicTransition: return "deterministic_transition";
    case InstanceKind::kBlockMdp: return "block_mdp";
  }
  return "?";
}

Pomdp gen_pomdp(InstanceKind kind, int S, int A, int O, int H, std::uint64_t seed) {
  check_sizes(S, A, O, H);
  if (kind == InstanceKind::kBlockMdp && O < S) throw ModelError("block_mdp needs O >= S");
  Rng rng(seed);
  Pomdp m = Pomdp::zeros(H, S, A, O);
  const bool det = kind == InstanceKind::kDeterministicTransition;
  if (det) {
    one_hot(m.mu1.data(), S, uniform_int(S, rng));
  } else {
    dirichlet1(m.mu1.data(), S, rng);
  }
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        if (det) {
          one_hot(m.t_row(h, s, a), S, uniform_int(S, rng));
        } else {
          dirichlet1(m.t_row(h, s, a), S, rng);
        }
      }
  for (int h = 1; h <= H; ++h) {
    if (kind == InstanceKind::kBlockMdp) {
      auto owner = block_partition(S, O, rng);
      for (int s = 0; s < S; ++s) block_row(m.obs_row(h, s), O, owner, s, rng);
    } else {
      for (int s = 0; s < S; ++s) dirichlet1(m.obs_row(h, s), O, rng);
    }
  }
  for (auto& r : m.r) r = uniform01(rng);
  return m;
}

std::vector<ObservabilityEstimate> observability_profile(const Pomdp& model) {
  std::vector<ObservabilityEstimate> out;
  for (int h = 1; h <= model.H; ++h) out.push_back(estimate_observability(model, h));
  return out;
}

Posg gen_posg(const PosgSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  if (spec.kind == "matching_pennies") {
    if (spec.H < 1) throw ModelError("H must be positive");
    Posg g = make_posg(spec.H, 1, {2, 2}, {1, 1}, spec.sharing);
    g.joint.mu1[0] = 1.0;
    for (int h = 1; h <= spec.H; ++h) {
      g.joint.obs_row(h, 0)[0] = 1.0;
      for (int a = 0; a < 4; ++a) {
        g.joint.t_row(h, 0, a)[0] = 1.0;
        double r1 = g.action_of(a, 0) == g.action_of(a, 1) ? 1.0 : 0.0;
        const std::size_t idx = static_cast<std::size_t>(h - 1) * 4 + a;
        g.ri[0][idx] = r1;
        g.ri[1][idx] = 1.0 - r1;
        g.joint.r[idx] = r1;
      }
    }
    return g;
  }
  if (spec.Ai.size() != spec.Oi.size() || spec.Ai.empty())
    throw ModelError("agent size lists differ");
  check_sizes(spec.S, 1, 1, spec.H);
  for (std::size_t i = 0; i < spec.Ai.size(); ++i)
    if (spec.Ai[i] < 1 || spec.Oi[i] < 1) throw ModelError("agent sizes must be positive");
  if (spec.zero_sum && spec.Ai.size() != 2) throw ModelError("zero-sum needs two agents");
  const bool block = spec.kind == "block";
  if (!block && spec.kind != "generic") throw ModelError("unknown POSG kind: " + spec.kind);
  if (block)
    for (int oi : spec.Oi)
      if (oi < spec.S) throw ModelError("block POSG needs every O_i >= S");
  Posg g = make_posg(spec.H, spec.S, spec.Ai, spec.Oi, spec.sharing);
  Pomdp& m = g.joint;
  const int S = m.S, A = m.A, O = m.O, n = g.n;
  dirichlet1(m.mu1.data(), S, rng);
  for (int h = 1; h <= m.H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) dirichlet1(m.t_row(h, s, a), S, rng);
  for (int h = 1; h <= m.H; ++h) {
    if (!block) {
      for (int s = 0; s < S; ++s) dirichlet1(m.obs_row(h, s), O, rng);
      continue;
    }
    // Independent per-agent block emissions.
    std::vector<std::vector<Dist>> per(n, std::vector<Dist>(S));
    for (int i = 0; i < n; ++i) {
      auto owner = block_partition(S, g.Oi[i], rng);
      for (int s = 0; s < S; ++s) {
        per[i][s].assign(g.Oi[i], 0.0);
        block_row(per[i][s].data(), g.Oi[i], owner, s, rng);
      }
    }
    for (int s = 0; s < S; ++s)
      for (int o = 0; o < O; ++o) {
        double p = 1.0;
        for (int i = 0; i < n; ++i) p *= per[i][s][g.obs_of(o, i)];
        m.obs_row(h, s)[o] = p;
      }
  }
  for (auto& r : g.ri[0]) r = uniform01(rng);
  for (int i = 1; i < n; ++i)
    for (std::size_t k = 0; k < g.ri[i].size(); ++k)
      g.ri[i][k] = spec.zero_sum ? 1.0 - g.ri[0][k] : uniform01(rng);
  m.r = g.ri[0];
  return g;
}

// ---------------------------------------------------------------------------
// Enumeration oracles

std::vector<WeightedTrajectory> enumerate_trajectories(const Pomdp& m, const Policy& policy,
                                                       std::size_t cap) {
  const double space = std::pow(static_cast<double>(m.S) * m.O * m.A, m.H);
  if (space > static_cast<double>(cap)) throw CapExceeded("trajectory space exceeds cap");
  std::vector<WeightedTrajectory> out;
  WeightedTrajectory cur;
  Dist pa(m.A);
  // Enters step h at state s with observation o already drawn.
  std::function<void(int, std::uint64_t, double)> rec = [&](int h, std::uint64_t key, double p) {
    const int s = cur.s.back();
    Dist row(m.A);
    policy.dist(h, key, s, row.data());
    for (int a = 0; a < m.A; ++a) {
      if (row[a] <= 0.0) continue;
      cur.a.push_back(a);
      if (h == m.H) {
        out.push_back(cur);
        out.back().prob = p * row[a];
      } else {
        const double* tr = m.t_row(h, s, a);
        for (int sn = 0; sn < m.S; ++sn) {
          if (tr[sn] <= 0.0) continue;
          for (int o = 0; o < m.O; ++o) {
            double po = m.obs_row(h + 1, sn)[o];
            if (po <= 0.0) continue;
            cur.s.push_back(sn);
            cur.o.push_back(o);
            rec(h + 1, policy.next_key(h, key, a, sn, o), p * row[a] * tr[sn] * po);
            cur.s.pop_back();
            cur.o.pop_back();
          }
        }
      }
      cur.a.pop_back();
    }
  };
  for (int s = 0; s < m.S; ++s)
    for (int o = 0; o < m.O; ++o) {
      double p = m.mu1[s] * m.obs_row(1, s)[o];
      if (p <= 0.0) continue;
      cur.s = {s};
      cur.o = {o};
      cur.a.clear();
      rec(1, policy.init_key(s, o), p);
    }
  return out;
}

namespace {

std::vector<int> flat_key(const WeightedTrajectory& t) {
  std::vector<int> k;
  for (std::size_t h = 0; h < t.s.size(); ++h) {
    k.push_back(t.s[h]);
    k.push_back(t.o[h]);
    k.push_back(t.a[h]);
  }
  return k;
}

double l1(const double* x, const double* y, int n) {
  double d = 0.0;
  for (int k = 0; k < n; ++k) d += std::abs(x[k] - y[k]);
  return d;
}

}  // namespace

double trajectory_l1(const std::vector<WeightedTrajectory>& p,
                     const std::vector<WeightedTrajectory>& q) {
  std::map<std::vector<int>, std::pair<double, double>> joint;
  for (auto& t : p) joint[flat_key(t)].first += t.prob;
  for (auto& t : q) joint[flat_key(t)].second += t.prob;
  double d = 0.0;
  for (auto& [k, v] : joint) d += std::abs(v.first - v.second);
  return d;
}

RandomHistoryPolicy::RandomHistoryPolicy(int H, int S, int A, int O, bool with_states,
                                         std::uint64_t seed)
    : keys_(H, S, A, O, with_states), seed_(seed) {}

void RandomHistoryPolicy::dist(int h, std::uint64_t key, int, double* out) const {
  std::uint64_t x = seed_ ^ (static_cast<std::uint64_t>(h) << 56) ^ (key * 0x2545F4914F6CDD1DULL);
  splitmix64(x);
  const int A = num_actions();
  double z = 0.0;
  for (int a = 0; a < A; ++a) {
    double u = (splitmix64(x) >> 11) * 0x1.0p-53;
    z += (out[a] = -std::log1p(-u));
  }
  for (int a = 0; a < A; ++a) out[a] /= z;
}

TrajBound traj_bound(const Pomdp& P, const Pomdp& Q, const Policy& policy, std::size_t cap) {
  auto tp = enumerate_trajectories(P, policy, cap);
  auto tq = enumerate_trajectories(Q, policy, cap);
  TrajBound out;
  out.tv = trajectory_l1(tp, tq);
  out.bound = l1(P.mu1.data(), Q.mu1.data(), P.S);
  for (auto& t : tp) {
    double e = 0.0;
    for (int h = 1; h <= P.H; ++h) {
      const int s = t.s[h - 1];
      e += l1(P.obs_row(h, s), Q.obs_row(h, s), P.O);
      if (h < P.H) e += l1(P.t_row(h, s, t.a[h - 1]), Q.t_row(h, s, t.a[h - 1]), P.S);
    }
    out.bound += t.prob * e;
  }
  // E_P ||b_h - b_hat_h||_1 per step, over histories (o_1..o_h, a_1..a_{h-1}).
  for (int h = 1; h <= P.H; ++h) {
    std::map<std::vector<int>, double> mass;
    for (auto& t : tp) {
      std::vector<int> k(t.o.begin(), t.o.begin() + h);
      k.insert(k.end(), t.a.begin(), t.a.begin() + (h - 1));
      mass[k] += t.prob;
    }
    double err = 0.0;
    for (auto& [k, w] : mass) {
      std::vector<int> o(k.begin(), k.begin() + h), a(k.begin() + h, k.end());
      Belief b = exact_belief(P, o, a), bq;
      try {
        bq = exact_belief(Q, o, a);
      } catch (const ImpossibleObservation&) {
        bq = uniform_belief(P.S);  // any distribution satisfies the bound here
      }
      err += w * l1(b.data(), bq.data(), P.S);
    }
    out.belief_error = std::max(out.belief_error, err);
  }
  return out;
}

double trick_slack(const std::vector<std::vector<double>>& P1,
                   const std::vector<std::vector<double>>& P2) {
  const std::size_t X = P1.size(), Y = P1[0].size();
  double joint = 0.0, marg = 0.0, cond = 0.0;
  for (std::size_t x = 0; x < X; ++x) {
    double m1 = std::accumulate(P1[x].begin(), P1[x].end(), 0.0);
    double m2 = std::accumulate(P2[x].begin(), P2[x].end(), 0.0);
    marg += std::abs(m1 - m2);
    double c = 0.0;
    for (std::size_t y = 0; y < Y; ++y) {
      joint += std::abs(P1[x][y] - P2[x][y]);
      double c1 = m1 > 0.0 ? P1[x][y] / m1 : 1.0 / Y;
      double c2 = m2 > 0.0 ? P2[x][y] / m2 : 1.0 / Y;
      c += std::abs(c1 - c2);
    }
    cond += m1 * c;
  }
  const double mid = joint - marg;
  return std::min(mid + cond, cond - mid);
}

double mask_slack(const std::vector<double>& x, const std::vector<double>& y,
                  const std::vector<int>& masked) {
  const int n = static_cast<int>(x.size());
  std::vector<bool> in(n, false);
  for (int k : masked) in[k] = true;
  const int keep = n - static_cast<int>(masked.size());
  if (keep <= 0) throw ModelError("mask must leave at least one index");
  double mx = 0.0, my = 0.0;
  for (int k : masked) {
    mx += x[k];
    my += y[k];
  }
  double before = 0.0, after = 0.0;
  for (int k = 0; k < n; ++k) {
    before += std::abs(x[k] - y[k]);
    if (!in[k]) after += std::abs((x[k] + mx / keep) - (y[k] + my / keep));
  }
  return before - after;
}

InequalityCase parse_inequality_case(const std::string& name) {
  if (name == "traj") return InequalityCase::kTraj;
  if (name == "trick") return InequalityCase::kTrick;
  if (name == "mask") return InequalityCase::kMask;
  throw ModelError("unknown inequality case: " + name);
}

namespace {

// Some entries zeroed so that degenerate conditionals are exercised.
std::vector<double> sparse_simplex(int n, Rng& rng) {
  std::vector<double> v(n);
  dirichlet1(v.data(), n, rng);
  if (n > 1 && uniform01(rng) < 0.3) {
    v[uniform_int(n, rng)] = 0.0;
    double z = std::accumulate(v.begin(), v.end(), 0.0);
    if (z <= 0.0) return sparse_simplex(n, rng);
    for (auto& x : v) x /= z;
  }
  return v;
}

Pomdp mix_models(const Pomdp& P, const Pomdp& Q, double w) {
  Pomdp out = P;
  for (std::size_t k = 0; k < out.mu1.size(); ++k) out.mu1[k] = (1 - w) * P.mu1[k] + w * Q.mu1[k];
  for (std::size_t k = 0; k < out.T.size(); ++k) out.T[k] = (1 - w) * P.T[k] + w * Q.T[k];
  for (std::size_t k = 0; k < out.Obs.size(); ++k) out.Obs[k] = (1 - w) * P.Obs[k] + w * Q.Obs[k];
  return out;
}

}  // namespace

InequalityReport check_inequalities(InequalityCase which, int trials, std::uint64_t seed) {
  if (trials < 1) throw ModelError("trials must be positive");
  InequalityReport rep;
  rep.which = which;
  rep.trials = trials;
  rep.min_slack = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    double slack = 0.0;
    switch (which) {
      case InequalityCase::kTraj: {
        const std::uint64_t s1 = rng(), s2 = rng(), s3 = rng(), s4 = rng();
        const auto kind = uniform01(rng) < 0.5 ? InstanceKind::kGeneric
                                               : InstanceKind::kDeterministicTransition;
        Pomdp P = gen_pomdp(kind, 2, 2, 2, 3, s1);
        double w = t % 10 == 0 ? 0.0 : uniform01(rng);
        Pomdp Ph = mix_models(P, gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, s2), w);
        RandomHistoryPolicy gen(3, 2, 2, 2, true, s3), hist(3, 2, 2, 2, false, s4);
        TrajBound bg = traj_bound(P, Ph, gen), bh = traj_bound(P, Ph, hist);
        slack = std::min({bg.slack_tv(), bh.slack_tv(), bh.slack_belief()});
        break;
      }
      case InequalityCase::kTrick: {
        const int X = 1 + uniform_int(4, rng), Y = 1 + uniform_int(4, rng);
        auto f1 = sparse_simplex(X * Y, rng), f2 = sparse_simplex(X * Y, rng);
        std::vector<std::vector<double>> P1(X, std::vector<double>(Y)), P2 = P1;
        for (int x = 0; x < X; ++x)
          for (int y = 0; y < Y; ++y) {
            P1[x][y] = f1[x * Y + y];
            P2[x][y] = f2[x * Y + y];
          }
        slack = trick_slack(P1, P2);
        break;
      }
      case InequalityCase::kMask: {
        const int n = 1 + uniform_int(6, rng);
        auto x = sparse_simplex(n, rng), y = sparse_simplex(n, rng);
        std::vector<int> masked;
        for (int k = 0; k < n; ++k)
          if (uniform01(rng) < 0.4) masked.push_back(k);
        if (static_cast<int>(masked.size()) == n) masked.pop_back();
        slack = mask_slack(x, y, masked);
        break;
      }
    }
    rep.min_slack = std::min(rep.min_slack, slack);
    if (slack < -1e-10) ++rep.failures;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Brute force over deterministic finite-memory policies

MemoryBruteForce best_deterministic_memory_policy(const Pomdp& m, int L, std::size_t cap) {
  const int H = m.H, S = m.S, A = m.A, O = m.O;
  MemoryCodec codec(L, A, O);
  const auto keys = enumerate_memory_keys(codec, H, A, O);
  std::vector<std::unordered_map<std::uint64_t, int>> index(H);
  std::size_t free_slots = 0;
  for (int h = 1; h <= H; ++h) {
    for (std::size_t k = 0; k < keys[h - 1].size(); ++k) index[h - 1][keys[h - 1][k]] = static_cast<int>(k);
    if (h < H) free_slots += keys[h - 1].size();
  }
  if (std::pow(static_cast<double>(A), static_cast<double>(free_slots)) > static_cast<double>(cap))
    throw CapExceeded("too many deterministic memory policies");

  std::vector<std::vector<int>> choice(H);
  for (int h = 1; h <= H; ++h) choice[h - 1].assign(keys[h - 1].size(), 0);
  MemoryBruteForce best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> best_choice;

  using Occ = std::unordered_map<std::uint64_t, Dist>;
  Occ first;
  for (int s = 0; s < S; ++s)
    for (int o = 0; o < O; ++o) {
      double p = m.mu1[s] * m.obs_row(1, s)[o];
      if (p <= 0.0) continue;
      auto& d = first[codec.init(o)];
      d.resize(S, 0.0);
      d[s] += p;
    }
  while (true) {
    ++best.candidates;
    Occ occ = first;
    double value = 0.0;
    for (int h = 1; h < H; ++h) {
      Occ next;
      for (auto& [key, d] : occ) {
        const int a = choice[h - 1][index[h - 1].at(key)];
        for (int s = 0; s < S; ++s) {
          if (d[s] == 0.0) continue;
          value += d[s] * m.reward(h, s, a);
          const double* tr = m.t_row(h, s, a);
          for (int sn = 0; sn < S; ++sn) {
            if (tr[sn] == 0.0) continue;
            for (int o = 0; o < O; ++o) {
              double p = d[s] * tr[sn] * m.obs_row(h + 1, sn)[o];
              if (p == 0.0) continue;
              auto& nd = next[codec.next(h, key, a, o)];
              nd.resize(S, 0.0);
              nd[sn] += p;
            }
          }
        }
      }
      occ.swap(next);
    }
    std::vector<int> last(keys[H - 1].size(), 0);
    for (auto& [key, d] : occ) {
      double bv = -1.0;
      int ba = 0;
      for (int a = 0; a < A; ++a) {
        double v = 0.0;
        for (int s = 0; s < S; ++s) v += d[s] * m.reward(H, s, a);
        if (v > bv + 1e-15) {
          bv = v;
          ba = a;
        }
      }
      value += bv;
      last[index[H - 1].at(key)] = ba;
    }
    if (value > best.value + 1e-15) {
      best.value = value;
      best_choice = choice;
      best_choice[H - 1] = last;
    }
    // Odometer over steps 1..H-1.
    int h = 0;
    std::size_t k = 0;
    bool done = true;
    for (h = 0; h < H - 1; ++h) {
      for (k = 0; k < choice[h].size(); ++k) {
        if (++choice[h][k] < A) {
          done = false;
          break;
        }
        choice[h][k] = 0;
      }
      if (!done) break;
    }
    if (done) break;
  }
  best.policy = FiniteMemoryPolicy(H, A, O, L);
  for (int h = 1; h <= H; ++h)
    for (std::size_t k = 0; k < keys[h - 1].size(); ++k) {
      Dist row(A, 0.0);
      row[best_choice[h - 1][k]] = 1.0;
      best.policy.set_row(h, keys[h - 1][k], row);
    }
  return best;
}

// ---------------------------------------------------------------------------
// Algorithms under a shared budget

TrainedPolicy train_algorithm(const std::string& algo, const Pomdp& env, long budget,
                              const AlgoParams& params, Rng& rng) {
  if (budget < 1) throw ModelError("budget must be positive");
  const int L = std::max(1, std::min(params.L, env.H));
  TrainedPolicy out;
  if (algo == "distill") {
    const long m_dec = std::max(1L, static_cast<long>(budget * params.decoder_fraction));
    UcbViConfig ucfg;
    ucfg.episodes = static_cast<int>(std::max(1L, budget - m_dec));
    ucfg.delta = params.delta;
    UcbViResult ucb = ucb_vi(mdp_of(env), env.r, env.H, ucfg, rng);
    DecoderTable dec = learn_decoders(env, ucb.policy, static_cast<int>(m_dec), rng);
    out.policy = std::make_shared<DecodedPolicy>(compose_policy(dec, ucb.policy));
    out.episodes_used = ucb.episodes_used + m_dec;
    return out;
  }
  if (algo == "npg") {
    const long half = std::max(1L, budget / 2);
    ExploreConfig ecfg;
    ecfg.N = static_cast<int>(std::max(1L, half / (static_cast<long>(env.H) * env.S * (env.A + 1))));
    ecfg.K_reach = ecfg.N;
    ecfg.delta = params.delta;
    EmpiricalModel counts = explore_and_count(env, ecfg, rng);
    ModelEstimate est = estimate_model(counts, env.r);
    Pomdp belief_model = est.model;
    try {
      belief_model = truncate_model(est.model, counts, params.truncation_eps).model;
    } catch (const TruncationFailure&) {
      // Keep the untruncated estimate.
    }
    std::vector<Belief> priors(env.H + 1, uniform_belief(env.S));
    ApproxBeliefTable belief(belief_model, L, priors,
                             ApproxBeliefTable::Provenance::kLearnedTruncated, true);
    OptimisticQConfig qcfg;
    qcfg.M = static_cast<int>(std::max(1L, (budget - half) / (static_cast<long>(params.npg_T) * env.H)));
    qcfg.delta = params.delta;
    NpgResult res = belief_weighted_npg(env, belief, params.npg_T,
                                        default_eta(env.A, params.npg_T, env.H), qcfg, rng);
    out.policy = std::make_shared<MixturePolicy>(res.mixture());
    out.episodes_used = counts.episodes_used + res.episodes_used;
    return out;
  }
  if (algo == "qlearning" || algo == "vanilla_aac") {
    double best = -1.0;
    for (double alpha : params.alpha_grid) {
      std::shared_ptr<FiniteMemoryPolicy> pol;
      long used = 0;
      if (algo == "qlearning") {
        QLearningConfig cfg;
        cfg.episodes = budget;
        cfg.alpha = alpha;
        cfg.L = L;
        auto r = asymmetric_q_learning(env, cfg, rng);
        pol = std::make_shared<FiniteMemoryPolicy>(std::move(r.policy));
        used = r.episodes_used;
      } else {
        VanillaAacConfig cfg;
        cfg.K = params.aac_K;
        cfg.T = static_cast<int>(std::max(1L, budget / params.aac_K));
        cfg.alpha = alpha;
        cfg.lambda = params.lambda;
        cfg.L = L;
        auto r = vanilla_aac(env, cfg, rng);
        pol = std::make_shared<FiniteMemoryPolicy>(std::move(r.policy));
        used = r.episodes_used;
      }
      double v = evaluate_policy_exact(env, *pol);
      if (v > best) {
        best = v;
        out.policy = pol;
        out.episodes_used = used;
      }
    }
    return out;
  }
  throw ModelError("unknown algorithm: " + algo);
}

// ---------------------------------------------------------------------------
// Experiment configuration and records

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    c.instance_kind = j.value("instance_kind", c.instance_kind);
    c.S = j.value("S", c.S);
    c.A = j.value("A", c.A);
    c.O = j.value("O", c.O);
    c.H = j.value("H", c.H);
    c.instances = j.value("instances", c.instances);
    c.seeds = j.value("seeds", c.seeds);
    c.algos = j.value("algos", c.algos);
    c.budget = j.value("budget", c.budget);
    c.checkpoints = j.value("checkpoints", c.checkpoints);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.threads = j.value("threads", c.threads);
    if (j.contains("params")) {
      const auto& p = j["params"];
      c.params.L = p.value("L", c.params.L);
      c.params.alpha_grid = p.value("alpha_grid", c.params.alpha_grid);
      c.params.lambda = p.value("lambda", c.params.lambda);
      c.params.aac_K = p.value("aac_K", c.params.aac_K);
      c.params.delta = p.value("delta", c.params.delta);
      c.params.decoder_fraction = p.value("decoder_fraction", c.params.decoder_fraction);
      c.params.npg_T = p.value("npg_T", c.params.npg_T);
      c.params.truncation_eps = p.value("truncation_eps", c.params.truncation_eps);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("bad config field: ") + e.what());
  }
  c.validate();
  return c;
}

std::string ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["instance_kind"] = instance_kind;
  j["S"] = S;
  j["A"] = A;
  j["O"] = O;
  j["H"] = H;
  j["instances"] = instances;
  j["seeds"] = seeds;
  j["algos"] = algos;
  j["budget"] = budget;
  j["checkpoints"] = checkpoints;
  j["out_dir"] = out_dir;
  j["threads"] = threads;
  j["params"] = {{"L", params.L},
                 {"alpha_grid", params.alpha_grid},
                 {"lambda", params.lambda},
                 {"aac_K", params.aac_K},
                 {"delta", params.delta},
                 {"decoder_fraction", params.decoder_fraction},
                 {"npg_T", params.npg_T},
                 {"truncation_eps", params.truncation_eps}};
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  if (parse_instance_kind(instance_kind) == InstanceKind::kBlockMdp && O < S)
    throw ModelError("block_mdp needs O >= S");
  check_sizes(S, A, O, H);
  if (instances < 1 || instances > 1000) throw ModelError("instances must lie in [1, 1000]");
  if (budget < 1 || checkpoints < 1 || checkpoints > budget)
    throw ModelError("budgets must be positive");
  if (seeds.empty()) throw ModelError("need at least one seed");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ModelError("seeds must be distinct");
  if (algos.empty()) throw ModelError("need at least one algorithm");
  for (auto& a : algos)
    if (a != "distill" && a != "npg" && a != "qlearning" && a != "vanilla_aac")
      throw ModelError("unknown algorithm: " + a);
  if (params.L < 1 || params.aac_K < 1 || params.npg_T < 1 || params.alpha_grid.empty())
    throw ModelError("hyperparameters must be positive");
  if (!(params.delta > 0.0 && params.delta < 1.0)) throw ModelError("delta must lie in (0,1)");
  if (!(params.decoder_fraction > 0.0 && params.decoder_fraction < 1.0))
    throw ModelError("decoder_fraction must lie in (0,1)");
}

std::string RunRecord::to_csv() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  std::ostringstream os;
  os << algo << ',' << instance_kind << ',' << S << ',' << A << ',' << O << ',' << H << ','
     << seed << ',' << episodes_used << ',' << metric << ',' << buf;
  return os.str();
}

RunRecord RunRecord::from_csv(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) f.push_back(cell);
  if (!line.empty() && line.back() == ',') f.push_back("");
  if (f.size() != 10) throw ModelError("CSV row needs 10 fields: " + line);
  RunRecord r;
  try {
    std::size_t pos = 0;
    auto to_int = [&](const std::string& s) {
      long long v = std::stoll(s, &pos);
      if (pos != s.size()) throw ModelError("bad integer: " + s);
      return v;
    };
    r.algo = f[0];
    r.instance_kind = f[1];
    r.S = static_cast<int>(to_int(f[2]));
    r.A = static_cast<int>(to_int(f[3]));
    r.O = static_cast<int>(to_int(f[4]));
    r.H = static_cast<int>(to_int(f[5]));
    r.seed = to_int(f[6]);
    r.episodes_used = static_cast<long>(to_int(f[7]));
    r.metric = f[8];
    r.value = std::stod(f[9], &pos);
    if (pos != f[9].size()) throw ModelError("bad value: " + f[9]);
  } catch (const std::logic_error&) {
    throw ModelError("malformed CSV row: " + line);
  }
  if (!std::isfinite(r.value)) throw ModelError("non-finite value: " + line);
  return r;
}

std::uint64_t instance_seed(std::uint64_t base, int index) { return base * 1000 + index; }

namespace {

struct Task {
  std::size_t seed_idx;
  int instance;
  std::size_t algo_idx;
  int checkpoint;  // 1..checkpoints
};

struct TaskResult {
  bool ok = false;
  double value = 0.0;
  long episodes_used = 0;
  std::string error;
};

double population_std(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const InstanceKind kind = parse_instance_kind(cfg.instance_kind);
  std::vector<Task> tasks;
  for (std::size_t si = 0; si < cfg.seeds.size(); ++si)
    for (int i = 0; i < cfg.instances; ++i)
      for (std::size_t ai = 0; ai < cfg.algos.size(); ++ai)
        for (int c = 1; c <= cfg.checkpoints; ++c) tasks.push_back({si, i, ai, c});
  std::vector<TaskResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      TaskResult& res = results[t];
      try {
        const std::uint64_t iseed = instance_seed(cfg.seeds[task.seed_idx], task.instance);
        Pomdp env = gen_pomdp(kind, cfg.S, cfg.A, cfg.O, cfg.H, iseed);
        std::seed_seq seq{static_cast<std::uint32_t>(iseed), static_cast<std::uint32_t>(iseed >> 32),
                          static_cast<std::uint32_t>(task.algo_idx),
                          static_cast<std::uint32_t>(task.checkpoint)};
        Rng rng(seq);
        const long budget = cfg.budget * task.checkpoint / cfg.checkpoints;
        TrainedPolicy tp = train_algorithm(cfg.algos[task.algo_idx], env, budget, cfg.params, rng);
        res.value = evaluate_policy_exact(env, *tp.policy);
        res.episodes_used = tp.episodes_used;
        res.ok = std::isfinite(res.value);
        if (!res.ok) res.error = "non-finite value";
      } catch (const std::exception& e) {
        res.error = e.what();
      }
    }
  };
  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::vector<RunRecord> rows;
  auto base_row = [&](const std::string& algo, std::int64_t seed) {
    RunRecord r;
    r.algo = algo;
    r.instance_kind = cfg.instance_kind;
    r.S = cfg.S;
    r.A = cfg.A;
    r.O = cfg.O;
    r.H = cfg.H;
    r.seed = seed;
    return r;
  };
  // final[seed][algo] -> values over instances
  std::vector<std::vector<std::vector<double>>> finals(
      cfg.seeds.size(), std::vector<std::vector<double>>(cfg.algos.size()));
  std::vector<std::vector<int>> failed(cfg.seeds.size(), std::vector<int>(cfg.algos.size(), 0));
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    const TaskResult& res = results[t];
    const std::string& algo = cfg.algos[task.algo_idx];
    RunRecord r = base_row(algo, static_cast<std::int64_t>(
                                     instance_seed(cfg.seeds[task.seed_idx], task.instance)));
    if (!res.ok) {
      std::cerr << "run failed (" << algo << ", seed " << r.seed << "): " << res.error << "\n";
      r.metric = "failed";
      r.episodes_used = cfg.budget * task.checkpoint / cfg.checkpoints;
      r.value = 0.0;
      rows.push_back(r);
      if (task.checkpoint == cfg.checkpoints) ++failed[task.seed_idx][task.algo_idx];
      continue;
    }
    r.metric = "value";
    r.episodes_used = cfg.budget * task.checkpoint / cfg.checkpoints;
    r.value = res.value;
    rows.push_back(r);
    if (task.checkpoint == cfg.checkpoints) {
      r.metric = "final_value";
      r.episodes_used = res.episodes_used;
      rows.push_back(r);
      finals[task.seed_idx][task.algo_idx].push_back(res.value);
    }
  }
  for (std::size_t si = 0; si < cfg.seeds.size(); ++si)
    for (std::size_t ai = 0; ai < cfg.algos.size(); ++ai) {
      const auto& v = finals[si][ai];
      RunRecord r = base_row(cfg.algos[ai], static_cast<std::int64_t>(cfg.seeds[si]));
      r.episodes_used = cfg.budget;
      const double mean =
          v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      r.metric = "mean_final_value";
      r.value = mean;
      rows.push_back(r);
      r.metric = "std_final_value";
      r.value = population_std(v, mean);
      rows.push_back(r);
      if (failed[si][ai] > 0) {
        r.metric = "failed_runs";
        r.value = failed[si][ai];
        rows.push_back(r);
      }
    }
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_csv((std::filesystem::path(cfg.out_dir) / "results.csv").string(), rows);
  }
  return rows;
}

void write_csv(const std::string& path, const std::vector<RunRecord>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ModelError("cannot write " + path);
  f << kCsvHeader << '\n';
  for (auto& r : rows) f << r.to_csv() << '\n';
}

std::vector<RunRecord> read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ModelError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw ModelError("empty CSV: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ModelError("unexpected CSV header: " + line);
  std::vector<RunRecord> rows;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(RunRecord::from_csv(line));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG learning curves

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

struct Series {
  std::string algo;
  std::vector<double> x, mean, sd;
};

std::string render_svg(const std::string& title, const std::vector<Series>& series) {
  const double W = 640, Hh = 400, ml = 60, mr = 140, mt = 40, mb = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!any) {
        x0 = x1 = s.x[k];
        y0 = s.mean[k] - s.sd[k];
        y1 = s.mean[k] + s.sd[k];
        any = true;
      }
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.mean[k] - s.sd[k]);
      y1 = std::max(y1, s.mean[k] + s.sd[k]);
    }
  if (x1 - x0 < 1e-12) {
    x0 -= 1;
    x1 += 1;
  }
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return Hh - mb - (y - y0) / (y1 - y0) * (Hh - mt - mb); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh
     << "\" viewBox=\"0 0 " << W << ' ' << Hh << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt(ml) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
     << title << "</text>\n";
  os << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(Hh - mb) << "\" x2=\"" << fmt(W - mr)
     << "\" y2=\"" << fmt(Hh - mb) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(ml) << "\" y2=\""
     << fmt(Hh - mb) << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << fmt((ml + W - mr) / 2) << "\" y=\"" << fmt(Hh - 12)
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">episodes</text>\n";
  os << "<text x=\"16\" y=\"" << fmt((mt + Hh - mb) / 2)
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << fmt((mt + Hh - mb) / 2) << ")\">reward</text>\n";
  if (any) {
    for (int k = 0; k <= 4; ++k) {
      double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
      os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(Hh - mb + 16)
         << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << fmt(xv)
         << "</text>\n";
      os << "<text x=\"" << fmt(ml - 6) << "\" y=\"" << fmt(py(yv) + 3)
         << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << fmt(yv)
         << "</text>\n";
    }
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    os << "<g class=\"series\" data-algo=\"" << s.algo << "\">\n";
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k)
      os << fmt(px(s.x[k])) << ',' << fmt(py(s.mean[k] + s.sd[k])) << ' ';
    for (std::size_t k = s.x.size(); k-- > 0;)
      os << fmt(px(s.x[k])) << ',' << fmt(py(s.mean[k] - s.sd[k])) << ' ';
    os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k)
      os << fmt(px(s.x[k])) << ',' << fmt(py(s.mean[k])) << ' ';
    os << "\"/>\n";
    const double ly = mt + 18.0 * i;
    os << "<rect x=\"" << fmt(W - mr + 10) << "\" y=\"" << fmt(ly) << "\" width=\"12\" height=\"12\" fill=\""
       << color << "\"/>\n";
    os << "<text x=\"" << fmt(W - mr + 28) << "\" y=\"" << fmt(ly + 10)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.algo << "</text>\n";
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& out_dir) {
  std::vector<RunRecord> rows = read_csv(csv_path);
  std::filesystem::create_directories(out_dir);
  // case -> algo (first-appearance order) -> episodes -> values
  std::map<std::string, std::vector<std::pair<std::string, std::map<long, std::vector<double>>>>>
      cases;
  for (auto& r : rows) {
    if (r.metric != "value") continue;
    std::ostringstream key;
    key << r.instance_kind << "_S" << r.S << "_A" << r.A << "_O" << r.O << "_H" << r.H;
    auto& algos = cases[key.str()];
    auto it = std::find_if(algos.begin(), algos.end(), [&](auto& p) { return p.first == r.algo; });
    if (it == algos.end()) {
      algos.push_back({r.algo, {}});
      it = algos.end() - 1;
    }
    it->second[r.episodes_used].push_back(r.value);
  }
  std::vector<std::string> paths;
  auto write = [&](const std::string& name, const std::string& title,
                   const std::vector<Series>& series) {
    auto path = (std::filesystem::path(out_dir) / (name + ".svg")).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ModelError("cannot write " + path);
    f << render_svg(title, series);
    paths.push_back(path);
  };
  if (cases.empty()) {
    write("curves", "no data", {});
    return paths;
  }
  for (auto& [name, algos] : cases) {
    std::vector<Series> series;
    for (auto& [algo, pts] : algos) {
      Series s;
      s.algo = algo;
      for (auto& [x, vals] : pts) {
        double m = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
        s.x.push_back(static_cast<double>(x));
        s.mean.push_back(m);
        s.sd.push_back(population_std(vals, m));
      }
      series.push_back(std::move(s));
    }
    write("case_" + name, name, series);
  }
  return paths;
}

}  // namespace privrl
