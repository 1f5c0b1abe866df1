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

#include "privrl/marl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

#include "json.hpp"
#include "privrl/lp.hpp"
#include "privrl/mdp_oracle.hpp"

namespace privrl {

namespace {

int digit_of(int x, const std::vector<int>& sizes, int i) {
  for (int j = 0; j < i; ++j) x /= sizes[j];
  return x % sizes[i];
}

int stride_of(const std::vector<int>& sizes, int i) {
  int s = 1;
  for (int j = 0; j < i; ++j) s *= sizes[j];
  return s;
}

int replace_digit(int x, const std::vector<int>& sizes, int i, int v) {
  int st = stride_of(sizes, i);
  return x + (v - digit_of(x, sizes, i)) * st;
}

std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int k = 0; k < e; ++k) r *= b;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Information structure

InfoState info_split(const Posg& g, const std::vector<int>& obs, const std::vector<int>& acts) {
  InfoState info;
  info.h = static_cast<int>(obs.size());
  if (info.h < 1 || static_cast<int>(acts.size()) < info.h - 1)
    throw ModelError("history must hold o_1..o_h and a_1..a_{h-1}");
  if (g.sharing == Sharing::kFull) {
    for (int t = 0; t < info.h; ++t) info.increments.push_back({t == 0 ? -1 : acts[t - 1], obs[t]});
    info.private_info.assign(g.n, -1);
  } else {
    for (int t = 0; t + 1 < info.h; ++t) info.increments.push_back({obs[t], acts[t]});
    for (int i = 0; i < g.n; ++i) info.private_info.push_back(g.obs_of(obs[info.h - 1], i));
  }
  return info;
}

CommonInfoCodec::CommonInfoCodec(const Posg& g, int L)
    : sharing_(g.sharing), L_(L), A_(g.A()), O_(g.O()) {
  if (L < 1) throw ModelError("memory length must be at least 1");
  if (sharing_ == Sharing::kFull) {
    full_ = MemoryCodec(L, A_, O_);
  } else {
    base_ = static_cast<std::uint64_t>(O_) * A_;
    if (L * std::log2(static_cast<double>(base_) + 1.0) > 62.0)
      throw CapExceeded("common-information key does not fit in 64 bits");
    drop_ = ipow(base_, L - 1);
  }
}

int CommonInfoCodec::length(int h) const {
  return sharing_ == Sharing::kFull ? std::min(L_, h) : std::min(L_, h - 1);
}

std::uint64_t CommonInfoCodec::init(int o1) const {
  return sharing_ == Sharing::kFull ? full_.init(o1) : 0;
}

std::uint64_t CommonInfoCodec::next(int h, std::uint64_t c, int o_h, int a_h, int o_next) const {
  if (sharing_ == Sharing::kFull) return full_.next(h, c, a_h, o_next);
  if (length(h) == L_) c %= drop_;
  return c * base_ + static_cast<std::uint64_t>(o_h) * A_ + a_h;
}

std::uint64_t CommonInfoCodec::of_history(const std::vector<int>& obs,
                                          const std::vector<int>& acts) const {
  std::uint64_t c = init(obs[0]);
  for (std::size_t t = 1; t < obs.size(); ++t)
    c = next(static_cast<int>(t), c, obs[t - 1], acts[t - 1], obs[t]);
  return c;
}

std::uint64_t CommonInfoCodec::encode(const InfoState& info) const {
  const int len = length(info.h);
  const auto& inc = info.increments;
  std::uint64_t c = 0;
  for (std::size_t t = inc.size() - len; t < inc.size(); ++t) {
    if (sharing_ == Sharing::kFull) {
      c = c * static_cast<std::uint64_t>((A_ + 1) * O_) +
          static_cast<std::uint64_t>(inc[t].first + 1) * O_ + inc[t].second;
    } else {
      c = c * base_ + static_cast<std::uint64_t>(inc[t].first) * A_ + inc[t].second;
    }
  }
  return c;
}

std::vector<std::pair<int, int>> CommonInfoCodec::decode(int h, std::uint64_t c) const {
  std::vector<std::pair<int, int>> out;
  if (sharing_ == Sharing::kFull) {
    FiniteMemory z = full_.decode(h, c);
    for (std::size_t j = 0; j < z.obs.size(); ++j) out.push_back({z.actions[j], z.obs[j]});
    return out;
  }
  const int len = length(h);
  out.resize(len);
  for (int j = len - 1; j >= 0; --j) {
    auto d = c % base_;
    c /= base_;
    out[j] = {static_cast<int>(d / A_), static_cast<int>(d % A_)};
  }
  return out;
}

int CommonInfoCodec::agent_private(const Posg& g, int p_joint, int i) const {
  return sharing_ == Sharing::kFull ? 0 : g.obs_of(p_joint, i);
}

int CommonInfoCodec::num_agent_private(const Posg& g, int i) const {
  return sharing_ == Sharing::kFull ? 1 : g.Oi[i];
}

std::vector<std::vector<std::uint64_t>> CommonInfoCodec::enumerate(int H,
                                                                   std::size_t cap) const {
  std::vector<std::vector<std::uint64_t>> keys(H);
  if (sharing_ == Sharing::kFull) {
    for (int o = 0; o < O_; ++o) keys[0].push_back(init(o));
  } else {
    keys[0].push_back(0);
  }
  std::size_t total = keys[0].size();
  for (int h = 1; h < H; ++h) {
    std::set<std::uint64_t> nxt;
    for (auto c : keys[h - 1])
      for (int a = 0; a < A_; ++a)
        for (int o = 0; o < O_; ++o) nxt.insert(next(h, c, o, a, o));
    keys[h].assign(nxt.begin(), nxt.end());
    total += keys[h].size();
    if (total > cap) throw CapExceeded("common-information key count exceeds cap");
  }
  return keys;
}

std::uint64_t compress_common(const Posg& g, const InfoState& info, int L) {
  return CommonInfoCodec(g, L).encode(info);
}

// ---------------------------------------------------------------------------
// Common-information beliefs

CommonBelief::CommonBelief(const Posg& shape, Pomdp model, int L, std::vector<Belief> priors,
                           bool reset)
    : model_(std::move(model)),
      codec_(shape, L),
      priors_(std::move(priors)),
      reset_(reset),
      memo_(model_.H) {
  if (static_cast<int>(priors_.size()) != model_.H + 1)
    throw ModelError("need one prior per step (index 0 unused)");
}

CommonBelief CommonBelief::exact(const Posg& g, int L) {
  std::vector<Belief> priors(g.H() + 1, uniform_belief(g.S()));
  return CommonBelief(g, g.joint, L, std::move(priors), true);
}

std::size_t CommonBelief::reset_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return resets_;
}

const Dist& CommonBelief::get(int h, std::uint64_t c) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_[h - 1].find(c);
    if (it != memo_[h - 1].end()) return it->second;
  }
  Dist d = compute(h, c);
  std::lock_guard<std::mutex> lock(mu_);
  return memo_[h - 1].emplace(c, std::move(d)).first->second;
}

Dist CommonBelief::compute(int h, std::uint64_t c) const {
  const int S = model_.S, O = model_.O;
  auto inc = codec_.decode(h, c);
  const int len = static_cast<int>(inc.size());
  // Applies f, or restarts from the prior of `step` when f hits an
  // impossible observation.
  auto guarded = [&](int step, const std::function<Belief()>& f) {
    try {
      return f();
    } catch (const ImpossibleObservation&) {
      if (!reset_) throw;
      std::lock_guard<std::mutex> lock(mu_);
      ++resets_;
      return priors_[step];
    }
  };
  if (codec_.sharing() == Sharing::kFull) {
    const int t0 = h - len + 1;  // step of the first observation kept
    Belief b;
    if (t0 == 1) {
      b = guarded(1, [&] { return bayes_update(model_.mu1, model_, 1, inc[0].second); });
    } else {
      b = guarded(t0, [&] {
        return belief_update(priors_[t0 - 1], inc[0].first, inc[0].second, model_, t0 - 1);
      });
    }
    for (int j = 1; j < len; ++j) {
      const int t = t0 + j;
      b = guarded(t, [&] { return belief_update(b, inc[j].first, inc[j].second, model_, t - 1); });
    }
    return b;
  }
  Dist out(static_cast<std::size_t>(S) * O, 0.0);
  Belief bp;
  if (h == 1) {
    bp = model_.mu1;
  } else {
    const int t0 = h - len;  // step of the first increment
    Belief b = t0 == 1 ? model_.mu1 : priors_[t0];
    b = guarded(t0, [&] { return bayes_update(b, model_, t0, inc[0].first); });
    for (int j = 1; j < len; ++j) {
      const int t = t0 + j;
      b = guarded(t, [&] {
        return belief_update(b, inc[j - 1].second, inc[j].first, model_, t - 1);
      });
    }
    bp = push_forward(b, inc[len - 1].second, model_, h - 1);
  }
  double z = 0.0;
  for (int s = 0; s < S; ++s)
    for (int o = 0; o < O; ++o) {
      double v = bp[s] * model_.obs_row(h, s)[o];
      out[static_cast<std::size_t>(s) * O + o] = v;
      z += v;
    }
  for (auto& v : out) v /= z;
  return out;
}

Dist exact_common_posterior(const Posg& g, const std::vector<int>& obs,
                            const std::vector<int>& acts) {
  const int h = static_cast<int>(obs.size());
  if (g.sharing == Sharing::kFull) return exact_belief(g.joint, obs, acts);
  const int S = g.S(), O = g.O();
  Belief bp;
  if (h == 1) {
    bp = g.joint.mu1;
  } else {
    std::vector<int> o_prev(obs.begin(), obs.end() - 1);
    std::vector<int> a_prev(acts.begin(), acts.begin() + (h - 2));
    bp = push_forward(exact_belief(g.joint, o_prev, a_prev), acts[h - 2], g.joint, h - 1);
  }
  Dist out(static_cast<std::size_t>(S) * O, 0.0);
  double z = 0.0;
  for (int s = 0; s < S; ++s)
    for (int o = 0; o < O; ++o) {
      double v = bp[s] * g.joint.obs_row(h, s)[o];
      out[static_cast<std::size_t>(s) * O + o] = v;
      z += v;
    }
  for (auto& v : out) v /= z;
  return out;
}

PosgBeliefResult posg_belief_learning(const Posg& env, const ExploreConfig& cfg, double eps,
                                      int L, Rng& rng, bool known_mu1) {
  EmpiricalModel counts = explore_and_count(env.joint, cfg, rng);
  ModelEstimate est = estimate_model(counts, env.joint.r,
                                     known_mu1 ? env.joint.mu1 : std::vector<double>{});
  TruncatedModel tm = truncate_model(est.model, counts, eps);
  std::vector<Belief> priors(env.H() + 1, uniform_belief(env.S()));
  for (int h = 1; h <= env.H(); ++h) {
    auto high = tm.high_states(h);
    Belief b(env.S(), 0.0);
    for (int s : high) b[s] = 1.0 / static_cast<double>(high.size());
    priors[h] = b;
  }
  Pomdp model = tm.model;
  return PosgBeliefResult{std::move(counts), std::move(tm),
                          CommonBelief(env, std::move(model), L, std::move(priors), true)};
}

double marl_bonus(long N, int h, int H, int S, int A, int O, int K, double delta, double C3) {
  const double span = H - h;
  const double l = std::log(static_cast<double>(S) * A * H * std::max(K, 1) / delta);
  return std::min(C3 * span * std::sqrt(O * l / static_cast<double>(std::max(N, 1L))),
                  2.0 * span);
}

// ---------------------------------------------------------------------------
// Bayesian games

const char* concept_name(Concept c) {
  switch (c) {
    case Concept::kNE: return "NE";
    case Concept::kCCE: return "CCE";
    case Concept::kCE: return "CE";
  }
  return "?";
}

int BayesianGame::num_joint_types() const {
  return std::accumulate(types.begin(), types.end(), 1, std::multiplies<int>());
}
int BayesianGame::num_joint_actions() const {
  return std::accumulate(actions.begin(), actions.end(), 1, std::multiplies<int>());
}
int BayesianGame::type_of(int p, int i) const { return digit_of(p, types, i); }
int BayesianGame::action_of(int a, int i) const { return digit_of(a, actions, i); }

namespace {

Dist softmax(const Dist& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  Dist p(logits.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) z += (p[k] = std::exp(logits[k] - mx));
  for (auto& x : p) x /= z;
  return p;
}

// Stationary distribution of a row-stochastic matrix with positive entries.
Dist stationary(const std::vector<Dist>& Q) {
  const int n = static_cast<int>(Q.size());
  std::vector<Dist> M(n, Dist(n + 1, 0.0));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) M[r][c] = Q[c][r] - (r == c ? 1.0 : 0.0);
  }
  for (int c = 0; c < n; ++c) M[n - 1][c] = 1.0;
  M[n - 1][n] = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
    std::swap(M[c], M[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == c || M[r][c] == 0.0) continue;
      double f = M[r][c] / M[c][c];
      for (int k = c; k <= n; ++k) M[r][k] -= f * M[c][k];
    }
  }
  Dist x(n);
  double z = 0.0;
  for (int r = 0; r < n; ++r) z += (x[r] = std::max(0.0, M[r][n] / M[r][r]));
  for (auto& v : x) v /= z;
  return x;
}

// Conditional expected payoff of agent i for each own action, per own type,
// against the current strategies of the others.
std::vector<Dist> counterfactual_gains(const BayesianGame& g,
                                       const std::vector<std::vector<Dist>>& sigma, int i) {
  const int P = g.num_joint_types(), A = g.num_joint_actions();
  std::vector<Dist> gains(g.types[i], Dist(g.actions[i], 0.0));
  Dist type_mass(g.types[i], 0.0);
  for (int p = 0; p < P; ++p) {
    if (g.prior[p] <= 0.0) continue;
    const int ti = g.type_of(p, i);
    type_mass[ti] += g.prior[p];
    for (int a = 0; a < A; ++a) {
      double w = g.prior[p];
      for (int j = 0; j < g.n && w > 0.0; ++j)
        if (j != i) w *= sigma[j][g.type_of(p, j)][g.action_of(a, j)];
      if (w > 0.0) gains[ti][g.action_of(a, i)] += w * g.payoff[i][static_cast<std::size_t>(p) * A + a];
    }
  }
  for (int t = 0; t < g.types[i]; ++t)
    if (type_mass[t] > 0.0)
      for (auto& v : gains[t]) v /= type_mass[t];
  return gains;
}

void finish_solution(const BayesianGame& g, BayesianSolution& sol) {
  const int P = g.num_joint_types(), A = g.num_joint_actions();
  const double R = static_cast<double>(sol.rounds.size());
  sol.joint.assign(P, Dist(A, 0.0));
  sol.marginal.assign(g.n, {});
  for (int i = 0; i < g.n; ++i) sol.marginal[i].assign(g.types[i], Dist(g.actions[i], 0.0));
  for (auto& round : sol.rounds) {
    for (int i = 0; i < g.n; ++i)
      for (int t = 0; t < g.types[i]; ++t)
        for (int b = 0; b < g.actions[i]; ++b) sol.marginal[i][t][b] += round[i][t][b] / R;
    for (int p = 0; p < P; ++p)
      for (int a = 0; a < A; ++a) {
        double w = 1.0;
        for (int i = 0; i < g.n && w > 0.0; ++i) w *= round[i][g.type_of(p, i)][g.action_of(a, i)];
        sol.joint[p][a] += w / R;
      }
  }
}

std::vector<std::vector<std::vector<Dist>>> hedge_rounds(const BayesianGame& g, int R) {
  std::vector<std::vector<Dist>> logw(g.n);
  std::vector<double> eta(g.n);
  const double range = std::max(g.payoff_range, 1e-12);
  for (int i = 0; i < g.n; ++i) {
    logw[i].assign(g.types[i], Dist(g.actions[i], 0.0));
    eta[i] = std::sqrt(8.0 * std::log(std::max(g.actions[i], 2)) / R) / range;
  }
  std::vector<std::vector<std::vector<Dist>>> rounds;
  rounds.reserve(R);
  for (int t = 0; t < R; ++t) {
    std::vector<std::vector<Dist>> sigma(g.n);
    for (int i = 0; i < g.n; ++i)
      for (auto& lw : logw[i]) sigma[i].push_back(softmax(lw));
    for (int i = 0; i < g.n; ++i) {
      auto gains = counterfactual_gains(g, sigma, i);
      for (int ti = 0; ti < g.types[i]; ++ti)
        for (int b = 0; b < g.actions[i]; ++b) logw[i][ti][b] += eta[i] * gains[ti][b];
    }
    rounds.push_back(std::move(sigma));
  }
  return rounds;
}

// Blum-Mansour: one Hedge learner per (agent, type, recommended action).
std::vector<std::vector<std::vector<Dist>>> swap_regret_rounds(const BayesianGame& g, int R) {
  std::vector<std::vector<std::vector<Dist>>> logw(g.n);
  std::vector<double> eta(g.n);
  const double range = std::max(g.payoff_range, 1e-12);
  for (int i = 0; i < g.n; ++i) {
    logw[i].assign(g.types[i], std::vector<Dist>(g.actions[i], Dist(g.actions[i], 0.0)));
    eta[i] = std::sqrt(8.0 * std::log(std::max(g.actions[i], 2)) / R) / range;
  }
  std::vector<std::vector<std::vector<Dist>>> rounds;
  rounds.reserve(R);
  for (int t = 0; t < R; ++t) {
    std::vector<std::vector<Dist>> sigma(g.n);
    for (int i = 0; i < g.n; ++i)
      for (int ti = 0; ti < g.types[i]; ++ti) {
        std::vector<Dist> Q;
        for (auto& lw : logw[i][ti]) Q.push_back(softmax(lw));
        sigma[i].push_back(stationary(Q));
      }
    for (int i = 0; i < g.n; ++i) {
      auto gains = counterfactual_gains(g, sigma, i);
      for (int ti = 0; ti < g.types[i]; ++ti)
        for (int b = 0; b < g.actions[i]; ++b)
          for (int c = 0; c < g.actions[i]; ++c)
            logw[i][ti][b][c] += eta[i] * sigma[i][ti][b] * gains[ti][c];
    }
    rounds.push_back(std::move(sigma));
  }
  return rounds;
}

}  // namespace

BayesianSolution bayesian_solver(const BayesianGame& g, Concept kind, int R) {
  if (R < 1) throw ModelError("R must be positive");
  if (static_cast<int>(g.payoff.size()) != g.n) throw ModelError("one payoff table per agent");
  BayesianSolution sol;
  const int A = g.num_joint_actions();
  if (g.n == 1) {
    std::vector<std::vector<Dist>> round(1);
    for (int t = 0; t < g.types[0]; ++t) {
      int best = 0;
      for (int a = 1; a < g.actions[0]; ++a)
        if (g.payoff[0][static_cast<std::size_t>(t) * A + a] >
            g.payoff[0][static_cast<std::size_t>(t) * A + best])
          best = a;
      Dist row(g.actions[0], 0.0);
      row[best] = 1.0;
      round[0].push_back(row);
    }
    sol.rounds.push_back(std::move(round));
    finish_solution(g, sol);
    return sol;
  }
  switch (kind) {
    case Concept::kNE: {
      if (g.n != 2 || !g.zero_sum)
        throw ModelError("NE mode needs a two-player zero-sum game");
      if (g.types[0] == 1 && g.types[1] == 1) {
        std::vector<std::vector<double>> M(g.actions[0], std::vector<double>(g.actions[1]));
        for (int a = 0; a < A; ++a)
          M[g.action_of(a, 0)][g.action_of(a, 1)] = 0.5 * (g.payoff[0][a] - g.payoff[1][a]);
        MatrixGameSolution ms = solve_matrix_game(M);
        sol.rounds.push_back({{ms.row}, {ms.col}});
      } else {
        auto rounds = hedge_rounds(g, R);
        BayesianSolution avg;
        avg.rounds = std::move(rounds);
        finish_solution(g, avg);
        sol.rounds.push_back(avg.marginal);
      }
      break;
    }
    case Concept::kCCE:
      sol.rounds = hedge_rounds(g, R);
      break;
    case Concept::kCE:
      sol.rounds = swap_regret_rounds(g, R);
      break;
  }
  finish_solution(g, sol);
  return sol;
}

double bayesian_gap(const BayesianGame& g, const BayesianSolution& sol, Concept kind) {
  const int P = g.num_joint_types(), A = g.num_joint_actions();
  double gap = 0.0;
  for (int i = 0; i < g.n; ++i) {
    const int Ai = g.actions[i];
    double value = 0.0;
    // dev[ti][rec][b]; NE/CCE collapse rec.
    std::vector<std::vector<Dist>> dev(g.types[i], std::vector<Dist>(Ai, Dist(Ai, 0.0)));
    for (int p = 0; p < P; ++p) {
      if (g.prior[p] <= 0.0) continue;
      const int ti = g.type_of(p, i);
      for (int a = 0; a < A; ++a) {
        double w = g.prior[p] * sol.joint[p][a];
        if (w == 0.0) continue;
        value += w * g.payoff[i][static_cast<std::size_t>(p) * A + a];
        const int rec = kind == Concept::kCE ? g.action_of(a, i) : 0;
        for (int b = 0; b < Ai; ++b) {
          int ab = replace_digit(a, g.actions, i, b);
          dev[ti][rec][b] += w * g.payoff[i][static_cast<std::size_t>(p) * A + ab];
        }
      }
    }
    double best = 0.0;
    for (auto& per_type : dev)
      for (auto& row : per_type) best += *std::max_element(row.begin(), row.end());
    gap = std::max(gap, best - value);
  }
  return gap;
}

// ---------------------------------------------------------------------------
// Joint policies

MarkovExpert::MarkovExpert(const Posg& g, std::vector<std::vector<Dist>> rounds)
    : H_(g.H()), S_(g.S()), A_(g.A()), Ai_(g.Ai), rounds_(std::move(rounds)) {
  if (rounds_.empty()) throw ModelError("expert needs at least one round");
  joint_.assign(static_cast<std::size_t>(H_) * S_, Dist(A_, 0.0));
  const double R = static_cast<double>(rounds_.size());
  for (int t = 0; t < num_rounds(); ++t)
    for (int h = 1; h <= H_; ++h)
      for (int s = 0; s < S_; ++s) {
        Dist& row = joint_[static_cast<std::size_t>(h - 1) * S_ + s];
        for (int a = 0; a < A_; ++a) {
          double w = 1.0;
          for (std::size_t i = 0; i < Ai_.size() && w > 0.0; ++i)
            w *= agent_prob(t, static_cast<int>(i), h, s, digit_of(a, Ai_, static_cast<int>(i)));
          row[a] += w / R;
        }
      }
}

double MarkovExpert::agent_prob(int t, int i, int h, int s, int a_i) const {
  return rounds_[t][i][(static_cast<std::size_t>(h - 1) * S_ + s) * Ai_[i] + a_i];
}

const Dist& MarkovExpert::joint_row(int h, int s) const {
  return joint_[static_cast<std::size_t>(h - 1) * S_ + s];
}

void MarkovExpert::dist(int h, int s, const std::vector<int>&, const std::vector<int>&,
                        double* out) const {
  const Dist& row = joint_row(h, s);
  std::copy(row.begin(), row.end(), out);
}

MarkovExpert markov_game_equilibrium(const Posg& g, Concept kind, int R) {
  const int H = g.H(), S = g.S(), A = g.A(), n = g.n;
  const int rounds = (n == 1 || kind == Concept::kNE) ? 1 : R;
  std::vector<std::vector<Dist>> table(rounds, std::vector<Dist>(n));
  for (int t = 0; t < rounds; ++t)
    for (int i = 0; i < n; ++i) table[t][i].assign(static_cast<std::size_t>(H) * S * g.Ai[i], 0.0);
  std::vector<Dist> v_next(n, Dist(S, 0.0)), v_cur(n, Dist(S, 0.0));
  for (int h = H; h >= 1; --h) {
    for (int s = 0; s < S; ++s) {
      BayesianGame game;
      game.n = n;
      game.actions = g.Ai;
      game.types.assign(n, 1);
      game.prior = {1.0};
      game.zero_sum = n == 2 && g.is_zero_sum();
      game.payoff_range = H - h + 1;
      game.payoff.assign(n, Dist(A, 0.0));
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < A; ++a) {
          double u = g.reward(i, h, s, a);
          const double* row = g.joint.t_row(h, s, a);
          for (int sn = 0; sn < S; ++sn) u += row[sn] * v_next[i][sn];
          game.payoff[i][a] = u;
        }
      BayesianSolution sol = bayesian_solver(game, kind, R);
      for (int t = 0; t < rounds; ++t) {
        const auto& src = sol.rounds[sol.rounds.size() == 1 ? 0 : t];
        for (int i = 0; i < n; ++i)
          for (int b = 0; b < g.Ai[i]; ++b)
            table[t][i][(static_cast<std::size_t>(h - 1) * S + s) * g.Ai[i] + b] = src[i][0][b];
      }
      for (int i = 0; i < n; ++i) {
        double v = 0.0;
        for (int a = 0; a < A; ++a) v += sol.joint[0][a] * game.payoff[i][a];
        v_cur[i][s] = v;
      }
    }
    v_next.swap(v_cur);
  }
  return MarkovExpert(g, std::move(table));
}

CommonInfoPolicy::CommonInfoPolicy(const Posg& g, CommonInfoCodec codec)
    : Ai_(g.Ai), Oi_(g.Oi), A_(g.A()), codec_(std::move(codec)), table_(g.H()) {}

void CommonInfoPolicy::set(int h, std::uint64_t c, const BayesianSolution& sol) {
  table_[h - 1][c] = Entry{sol.joint, sol.marginal};
}

void CommonInfoPolicy::dist_common(int h, std::uint64_t c, int p, double* out) const {
  auto it = table_[h - 1].find(c);
  if (it == table_[h - 1].end()) {
    std::fill(out, out + A_, 1.0 / A_);
    return;
  }
  const Entry& e = it->second;
  if (!use_marginals_) {
    std::copy(e.joint[p].begin(), e.joint[p].end(), out);
    return;
  }
  const int n = static_cast<int>(Ai_.size());
  for (int a = 0; a < A_; ++a) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      int pi = codec_.sharing() == Sharing::kFull ? 0 : digit_of(p, Oi_, i);
      w *= e.marginal[i][pi][digit_of(a, Ai_, i)];
    }
    out[a] = w;
  }
}

void CommonInfoPolicy::dist(int h, int, const std::vector<int>& obs, const std::vector<int>& acts,
                            double* out) const {
  dist_common(h, codec_.of_history(obs, acts), codec_.joint_private(obs.back()), out);
}

Trajectory sample_posg_episode(const Posg& g, const JointPolicy& pi, Rng& rng) {
  const Pomdp& m = g.joint;
  Trajectory tr;
  Dist pa(m.A);
  int s = sample_categorical(m.mu1, rng);
  tr.s.push_back(s);
  tr.o.push_back(sample_categorical(m.obs_row(1, s), m.O, rng));
  for (int h = 1; h <= m.H; ++h) {
    pi.dist(h, s, tr.o, tr.a, pa.data());
    int a = sample_categorical(pa, rng);
    tr.a.push_back(a);
    tr.rewards.push_back(g.reward(0, h, s, a));
    s = sample_categorical(m.t_row(h, s, a), m.S, rng);
    tr.s.push_back(s);
    if (h < m.H) tr.o.push_back(sample_categorical(m.obs_row(h + 1, s), m.O, rng));
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Optimistic value iteration

OptimisticViResult optimistic_vi(const Posg& env, const CommonBelief& belief,
                                 const OptimisticViConfig& cfg, Rng& rng) {
  if (cfg.K < 1) throw ModelError("K must be positive");
  const int H = env.H(), S = env.S(), A = env.A(), O = env.O(), n = env.n;
  const int P = belief.num_private();
  const CommonInfoCodec& codec = belief.codec();
  const auto keys = codec.enumerate(H, kDefaultEnumCap);
  const bool zero_sum = n == 2 && env.is_zero_sum();

  std::vector<long> N(static_cast<std::size_t>(H) * S * A, 0);
  std::vector<long> No(static_cast<std::size_t>(H) * S * A * O, 0);
  auto sa = [&](int h, int s, int a) { return (static_cast<std::size_t>(h - 1) * S + s) * A + a; };

  OptimisticViResult res;
  double best_proxy = std::numeric_limits<double>::infinity();
  std::vector<std::unordered_map<std::uint64_t, std::vector<double>>> vh(H + 1), vl(H + 1);
  Dist J(O);
  for (int k = 1; k <= cfg.K; ++k) {
    CommonInfoPolicy pk(env, codec);
    for (int h = H; h >= 1; --h) {
      vh[h - 1].clear();
      vl[h - 1].clear();
      for (auto c : keys[h - 1]) {
        const Dist& b = belief.get(h, c);
        BayesianGame game;
        game.n = n;
        game.actions = env.Ai;
        for (int i = 0; i < n; ++i) game.types.push_back(codec.num_agent_private(env, i));
        game.prior.assign(P, 0.0);
        game.zero_sum = zero_sum;
        game.payoff_range = H - h + 1;
        game.payoff.assign(n, Dist(static_cast<std::size_t>(P) * A, 0.0));
        std::vector<Dist> low(n, Dist(static_cast<std::size_t>(P) * A, 0.0));
        for (int p = 0; p < P; ++p) {
          double mass = 0.0;
          for (int s = 0; s < S; ++s) mass += b[static_cast<std::size_t>(s) * P + p];
          game.prior[p] = mass;
          for (int s = 0; s < S; ++s) {
            // Types nobody can hold are scored under a uniform state.
            double w = mass > 0.0 ? b[static_cast<std::size_t>(s) * P + p] / mass : 1.0 / S;
            if (w == 0.0) continue;
            for (int a = 0; a < A; ++a) {
              const long cnt = N[sa(h, s, a)];
              const double bonus = marl_bonus(cnt, h, H, S, A, O, cfg.K, cfg.delta, cfg.C3);
              for (int o = 0; o < O; ++o)
                J[o] = cnt == 0 ? 1.0 / O : static_cast<double>(No[sa(h, s, a) * O + o]) / cnt;
              for (int i = 0; i < n; ++i) {
                double ch = 0.0, cl = 0.0;
                if (h < H) {
                  for (int o = 0; o < O; ++o) {
                    if (J[o] == 0.0) continue;
                    auto cn = codec.next(h, c, p, a, o);
                    ch += J[o] * vh[h].at(cn)[i];
                    cl += J[o] * vl[h].at(cn)[i];
                  }
                }
                const double r = env.reward(i, h, s, a);
                double qh = std::min(r + bonus + ch, static_cast<double>(H - h + 1));
                double ql = std::max(r - bonus + cl, 0.0);
                if (ql > qh + 1e-12) res.low_le_high = false;
                if (qh > H - h + 1 + 1e-12 || ql < 0.0) res.within_clamps = false;
                game.payoff[i][static_cast<std::size_t>(p) * A + a] += w * qh;
                low[i][static_cast<std::size_t>(p) * A + a] += w * ql;
              }
            }
          }
        }
        double total = std::accumulate(game.prior.begin(), game.prior.end(), 0.0);
        if (total <= 0.0) std::fill(game.prior.begin(), game.prior.end(), 1.0 / P);
        BayesianSolution sol = bayesian_solver(game, cfg.kind, cfg.R);
        pk.set(h, c, sol);
        std::vector<double> hv(n, 0.0), lv(n, 0.0);
        for (int p = 0; p < P; ++p)
          for (int a = 0; a < A; ++a) {
            double w = game.prior[p] * sol.joint[p][a];
            if (w == 0.0) continue;
            for (int i = 0; i < n; ++i) {
              hv[i] += w * game.payoff[i][static_cast<std::size_t>(p) * A + a];
              lv[i] += w * low[i][static_cast<std::size_t>(p) * A + a];
            }
          }
        vh[h - 1][c] = hv;
        vl[h - 1][c] = lv;
      }
      // Values at step h+1 are no longer needed once step h is done.
      if (h < H) {
        vh[h].clear();
        vl[h].clear();
      }
    }
    Trajectory tr = sample_posg_episode(env, pk, rng);
    ++res.episodes_used;
    const std::uint64_t c1 = codec.init(tr.o[0]);
    std::vector<double> hi = vh[0].at(c1), lo = vl[0].at(c1);
    res.v_high.push_back(hi);
    res.v_low.push_back(lo);
    double proxy = cfg.select_max_over_agents ? -std::numeric_limits<double>::infinity()
                                              : std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double d = hi[i] - lo[i];
      proxy = cfg.select_max_over_agents ? std::max(proxy, d) : std::min(proxy, d);
    }
    if (proxy < best_proxy) {
      best_proxy = proxy;
      res.k_star = k;
      res.policy = pk;
    }
    for (int h = 1; h <= H; ++h) {
      const std::size_t idx = sa(h, tr.s[h - 1], tr.a[h - 1]);
      ++N[idx];
      if (h < H) ++No[idx * O + tr.o[h]];
    }
  }
  if (zero_sum) res.policy.set_use_marginals(true);
  return res;
}

// ---------------------------------------------------------------------------
// Enumerated game tree

namespace {

struct Node {
  int h = 1, s = 0;
  double chance = 0.0;  // level-1 nodes only
  std::vector<int> obs, acts;
  Dist pa;
  struct Edge {
    int a, child;
    double prob;
  };
  std::vector<Edge> edges;
  std::vector<int> info;  // per agent, id within the level
};

struct GameTree {
  int n = 0, A = 0;
  std::vector<int> Ai;
  std::vector<std::vector<Node>> levels;
  std::vector<int> info_count;  // [level * n + i]
  int infos(int h, int i) const { return info_count[(h - 1) * n + i]; }
};

std::vector<int> info_key(const Posg& g, const Node& v, int i) {
  std::vector<int> key;
  if (g.sharing == Sharing::kFull) {
    key = v.obs;
  } else {
    key.assign(v.obs.begin(), v.obs.end() - 1);
    key.push_back(-1 - g.obs_of(v.obs.back(), i));
  }
  key.push_back(-1000);
  key.insert(key.end(), v.acts.begin(), v.acts.end());
  return key;
}

GameTree build_tree(const Posg& g, const JointPolicy& pi, std::size_t cap) {
  const Pomdp& m = g.joint;
  GameTree t;
  t.n = g.n;
  t.A = m.A;
  t.Ai = g.Ai;
  t.levels.resize(m.H);
  std::size_t total = 0;
  for (int s = 0; s < m.S; ++s)
    for (int o = 0; o < m.O; ++o) {
      double p = m.mu1[s] * m.obs_row(1, s)[o];
      if (p <= 0.0) continue;
      Node v;
      v.h = 1;
      v.s = s;
      v.chance = p;
      v.obs = {o};
      t.levels[0].push_back(std::move(v));
    }
  total += t.levels[0].size();
  for (int h = 1; h <= m.H; ++h) {
    auto& level = t.levels[h - 1];
    for (std::size_t idx = 0; idx < level.size(); ++idx) {
      Node& v = level[idx];
      v.pa.assign(m.A, 0.0);
      pi.dist(h, v.s, v.obs, v.acts, v.pa.data());
      if (h == m.H) continue;
      for (int a = 0; a < m.A; ++a) {
        const double* tr = m.t_row(h, v.s, a);
        for (int sn = 0; sn < m.S; ++sn) {
          if (tr[sn] <= 0.0) continue;
          for (int o = 0; o < m.O; ++o) {
            double p = tr[sn] * m.obs_row(h + 1, sn)[o];
            if (p <= 0.0) continue;
            Node c;
            c.h = h + 1;
            c.s = sn;
            c.obs = level[idx].obs;
            c.obs.push_back(o);
            c.acts = level[idx].acts;
            c.acts.push_back(a);
            auto& next = t.levels[h];
            level[idx].edges.push_back({a, static_cast<int>(next.size()), p});
            next.push_back(std::move(c));
            if (++total > cap) throw CapExceeded("game tree exceeds node cap");
          }
        }
      }
    }
  }
  t.info_count.assign(static_cast<std::size_t>(m.H) * g.n, 0);
  for (int h = 1; h <= m.H; ++h)
    for (int i = 0; i < g.n; ++i) {
      std::map<std::vector<int>, int> ids;
      for (Node& v : t.levels[h - 1]) {
        auto key = info_key(g, v, i);
        auto it = ids.emplace(std::move(key), static_cast<int>(ids.size())).first;
        if (v.info.empty()) v.info.assign(g.n, 0);
        v.info[i] = it->second;
      }
      t.info_count[(h - 1) * g.n + i] = static_cast<int>(ids.size());
    }
  return t;
}

using NodeReward = std::function<double(const Node&, int)>;

double tree_value(const GameTree& t, const NodeReward& rew) {
  std::vector<double> mass, next;
  for (auto& v : t.levels[0]) mass.push_back(v.chance);
  double total = 0.0;
  for (std::size_t h = 0; h < t.levels.size(); ++h) {
    const auto& level = t.levels[h];
    next.assign(h + 1 < t.levels.size() ? t.levels[h + 1].size() : 0, 0.0);
    for (std::size_t idx = 0; idx < level.size(); ++idx) {
      const Node& v = level[idx];
      if (mass[idx] == 0.0) continue;
      for (int a = 0; a < t.A; ++a)
        if (v.pa[a] > 0.0) total += mass[idx] * v.pa[a] * rew(v, a);
      for (auto& e : v.edges) next[e.child] += mass[idx] * v.pa[e.a] * e.prob;
    }
    mass.swap(next);
  }
  return total;
}

// Others' marginal: P(a_{-i} | node) indexed by the joint action with agent
// i's digit set to zero.
Dist others_marginal(const GameTree& t, const Node& v, int i) {
  Dist out(t.A, 0.0);
  for (int a = 0; a < t.A; ++a) out[replace_digit(a, t.Ai, i, 0)] += v.pa[a];
  return out;
}

double best_response(const GameTree& t, int i, const NodeReward& rew) {
  const int H = static_cast<int>(t.levels.size());
  const int Ai = t.Ai[i];
  std::vector<std::vector<double>> cw(H);
  cw[0].clear();
  for (auto& v : t.levels[0]) cw[0].push_back(v.chance);
  for (int h = 1; h < H; ++h) {
    cw[h].assign(t.levels[h].size(), 0.0);
    for (std::size_t idx = 0; idx < t.levels[h - 1].size(); ++idx) {
      const Node& v = t.levels[h - 1][idx];
      if (cw[h - 1][idx] == 0.0) continue;
      Dist om = others_marginal(t, v, i);
      for (auto& e : v.edges)
        cw[h][e.child] += cw[h - 1][idx] * om[replace_digit(e.a, t.Ai, i, 0)] * e.prob;
    }
  }
  std::vector<double> u_next;
  for (int h = H; h >= 1; --h) {
    const int ninfo = t.infos(h, i);
    std::vector<Dist> val(ninfo, Dist(Ai, 0.0));
    std::vector<std::vector<std::set<int>>> links(ninfo, std::vector<std::set<int>>(Ai));
    const auto& level = t.levels[h - 1];
    for (std::size_t idx = 0; idx < level.size(); ++idx) {
      const Node& v = level[idx];
      const int I = v.info[i];
      if (cw[h - 1][idx] > 0.0) {
        Dist om = others_marginal(t, v, i);
        for (int a = 0; a < t.A; ++a) {
          double w = om[replace_digit(a, t.Ai, i, 0)];
          if (w > 0.0) val[I][digit_of(a, t.Ai, i)] += cw[h - 1][idx] * w * rew(v, a);
        }
      }
      for (auto& e : v.edges)
        links[I][digit_of(e.a, t.Ai, i)].insert(t.levels[h][e.child].info[i]);
    }
    std::vector<double> u(ninfo, 0.0);
    for (int I = 0; I < ninfo; ++I) {
      double best = -std::numeric_limits<double>::infinity();
      for (int b = 0; b < Ai; ++b) {
        double x = val[I][b];
        for (int J : links[I][b]) x += u_next[J];
        best = std::max(best, x);
      }
      u[I] = best;
    }
    u_next.swap(u);
  }
  return std::accumulate(u_next.begin(), u_next.end(), 0.0);
}

// Value for agent i when it maps each recommendation through `mod`, indexed
// by entry id from `entry_of`.
double modified_value(const GameTree& t, int i, const NodeReward& rew,
                      const std::vector<std::vector<int>>& entry_base,  // [h-1][info]
                      const std::vector<int>& mod) {
  std::vector<double> mass, next;
  for (auto& v : t.levels[0]) mass.push_back(v.chance);
  double total = 0.0;
  for (std::size_t h = 0; h < t.levels.size(); ++h) {
    const auto& level = t.levels[h];
    next.assign(h + 1 < t.levels.size() ? t.levels[h + 1].size() : 0, 0.0);
    for (std::size_t idx = 0; idx < level.size(); ++idx) {
      const Node& v = level[idx];
      if (mass[idx] == 0.0) continue;
      const int base = entry_base[h][v.info[i]];
      // played[a] accumulates the probability of each joint action played.
      Dist played(t.A, 0.0);
      for (int a = 0; a < t.A; ++a) {
        if (v.pa[a] <= 0.0) continue;
        int rec = digit_of(a, t.Ai, i);
        int dev = base < 0 ? rec : mod[base + rec];
        played[replace_digit(a, t.Ai, i, dev)] += v.pa[a];
      }
      for (int a = 0; a < t.A; ++a)
        if (played[a] > 0.0) total += mass[idx] * played[a] * rew(v, a);
      for (auto& e : v.edges)
        if (played[e.a] > 0.0) next[e.child] += mass[idx] * played[e.a] * e.prob;
    }
    mass.swap(next);
  }
  return total;
}

double ce_best(const GameTree& t, int i, const NodeReward& rew, std::size_t combo_cap,
               bool* exhaustive) {
  const int Ai = t.Ai[i];
  std::vector<std::vector<int>> entry_base(t.levels.size());
  int entries = 0;
  for (std::size_t h = 0; h < t.levels.size(); ++h) {
    entry_base[h].assign(t.infos(static_cast<int>(h) + 1, i), -1);
    for (int I = 0; I < static_cast<int>(entry_base[h].size()); ++I) {
      entry_base[h][I] = entries;
      entries += Ai;
    }
  }
  std::vector<int> mod(entries);
  for (int e = 0; e < entries; ++e) mod[e] = e % Ai;  // identity
  double best = modified_value(t, i, rew, entry_base, mod);
  const double combos = std::pow(static_cast<double>(Ai), entries);
  if (combos <= static_cast<double>(combo_cap)) {
    std::vector<int> cur(entries, 0);
    while (true) {
      best = std::max(best, modified_value(t, i, rew, entry_base, cur));
      int k = 0;
      while (k < entries && ++cur[k] == Ai) cur[k++] = 0;
      if (k == entries) break;
    }
    return best;
  }
  *exhaustive = false;
  for (int sweep = 0; sweep < 50; ++sweep) {
    bool improved = false;
    for (int e = 0; e < entries; ++e) {
      int keep = mod[e];
      for (int b = 0; b < Ai; ++b) {
        if (b == keep) continue;
        mod[e] = b;
        double v = modified_value(t, i, rew, entry_base, mod);
        if (v > best + 1e-12) {
          best = v;
          keep = b;
          improved = true;
        }
      }
      mod[e] = keep;
    }
    if (!improved) break;
  }
  return best;
}

}  // namespace

std::vector<double> joint_policy_values(const Posg& g, const JointPolicy& pi, std::size_t cap) {
  GameTree t = build_tree(g, pi, cap);
  std::vector<double> out;
  for (int i = 0; i < g.n; ++i)
    out.push_back(tree_value(t, [&](const Node& v, int a) { return g.reward(i, v.h, v.s, a); }));
  return out;
}

std::string GapReport::to_json() const {
  nlohmann::json j;
  j["kind"] = concept_name(kind);
  j["gap"] = gap;
  j["values"] = values;
  j["best_values"] = best_values;
  j["exhaustive"] = exhaustive;
  return j.dump();
}

GapReport equilibrium_gap(const Posg& g, const JointPolicy& pi, Concept kind,
                          const GapOptions& opts) {
  GameTree t = build_tree(g, pi, opts.node_cap);
  GapReport rep;
  rep.kind = kind;
  for (int i = 0; i < g.n; ++i) {
    NodeReward rew = [&g, i](const Node& v, int a) { return g.reward(i, v.h, v.s, a); };
    double value = tree_value(t, rew);
    double best = kind == Concept::kCE ? ce_best(t, i, rew, opts.ce_combo_cap, &rep.exhaustive)
                                          : best_response(t, i, rew);
    rep.values.push_back(value);
    rep.best_values.push_back(best);
    rep.gap = std::max(rep.gap, best - value);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Multi-agent decoding

DecoderPosterior::DecoderPosterior(Posg model) : model_(std::move(model)) {}

std::size_t DecoderPosterior::fallback_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return fallbacks_;
}

Belief DecoderPosterior::get(int j, int h, const std::vector<int>& obs,
                             const std::vector<int>& acts) const {
  std::vector<int> key(obs.begin(), obs.begin() + h);
  key.push_back(-1);
  key.insert(key.end(), acts.begin(), acts.begin() + (h - 1));
  const bool full = model_.sharing == Sharing::kFull;
  const int who = full ? 0 : j;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find({who, key});
    if (it != memo_.end()) return it->second;
  }
  const Pomdp& m = model_.joint;
  std::vector<int> o(obs.begin(), obs.begin() + h), a(acts.begin(), acts.begin() + (h - 1));
  Belief b;
  bool ok = true;
  try {
    if (full) {
      b = exact_belief(m, o, a);
    } else {
      Belief bp = m.mu1;
      if (h > 1) {
        std::vector<int> o_prev(o.begin(), o.end() - 1), a_prev(a.begin(), a.end() - 1);
        bp = push_forward(exact_belief(m, o_prev, a_prev), a.back(), m, h - 1);
      }
      const int oj = model_.obs_of(o.back(), j);
      b.assign(m.S, 0.0);
      double z = 0.0;
      for (int s = 0; s < m.S; ++s) {
        double like = 0.0;
        for (int x = 0; x < m.O; ++x)
          if (model_.obs_of(x, j) == oj) like += m.obs_row(h, s)[x];
        z += (b[s] = bp[s] * like);
      }
      if (z < kMinLikelihood) throw ImpossibleObservation("decoder history ruled out");
      for (auto& v : b) v /= z;
    }
  } catch (const ImpossibleObservation&) {
    ok = false;
    b = uniform_belief(m.S);
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (!ok) ++fallbacks_;
  return memo_.emplace(std::make_pair(who, std::move(key)), b).first->second;
}

long decoder_theory_n(int O, int S, int H, int n, double delta, double eps) {
  if (!(delta > 0.0 && delta < 1.0) || !(eps > 0.0 && eps < 1.0))
    throw ModelError("delta and eps must lie in (0,1)");
  return static_cast<long>(
      std::ceil(O * std::log(static_cast<double>(S) * H * n / delta) / eps));
}

namespace {

double agent_marginal(const Posg& g, const Dist& joint, int i, int b) {
  double p = 0.0;
  for (int a = 0; a < g.A(); ++a)
    if (g.action_of(a, i) == b) p += joint[a];
  return p;
}

// Agent i controls its own action; the others follow the expert's marginal.
Mdp unilateral_mdp(const Posg& g, const MarkovExpert& ex, int i) {
  const int H = g.H(), S = g.S(), A = g.A(), Ai = g.Ai[i];
  Mdp m = Mdp::zeros(H, S, Ai);
  m.mu1 = g.joint.mu1;
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) {
      const Dist& pj = ex.joint_row(h, s);
      for (int a = 0; a < A; ++a) {
        if (pj[a] == 0.0) continue;
        for (int b = 0; b < Ai; ++b) {
          const double* t = g.joint.t_row(h, s, replace_digit(a, g.Ai, i, b));
          double* row = m.t_row(h, s, b);
          for (int sn = 0; sn < S; ++sn) row[sn] += pj[a] * t[sn];
        }
      }
    }
  return m;
}

// States (s, recommended a_i); agent i picks the played action.
Mdp extended_mdp(const Posg& g, const MarkovExpert& ex, int i) {
  const int H = g.H(), S = g.S(), A = g.A(), Ai = g.Ai[i];
  Mdp m = Mdp::zeros(H, S * Ai, Ai);
  for (int s = 0; s < S; ++s)
    for (int rec = 0; rec < Ai; ++rec)
      m.mu1[s * Ai + rec] = g.joint.mu1[s] * agent_marginal(g, ex.joint_row(1, s), i, rec);
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) {
      const Dist& pj = ex.joint_row(h, s);
      for (int rec = 0; rec < Ai; ++rec) {
        const double prec = agent_marginal(g, pj, i, rec);
        for (int a = 0; a < A; ++a) {
          // Others conditional on the recommendation, or their marginal when
          // the recommendation has zero probability.
          double w = prec > 0.0 ? (g.action_of(a, i) == rec ? pj[a] / prec : 0.0) : pj[a];
          if (w == 0.0) continue;
          for (int b = 0; b < Ai; ++b) {
            const double* t = g.joint.t_row(h, s, replace_digit(a, g.Ai, i, b));
            double* row = m.t_row(h, s * Ai + rec, b);
            for (int sn = 0; sn < S; ++sn) {
              if (t[sn] == 0.0) continue;
              for (int rn = 0; rn < Ai; ++rn) {
                double pr = h < H ? agent_marginal(g, ex.joint_row(h + 1, sn), i, rn) : 1.0 / Ai;
                row[sn * Ai + rn] += w * t[sn] * pr;
              }
            }
          }
        }
      }
    }
  return m;
}

}  // namespace

MultiAgentDecoders multi_agent_decoders(const Posg& env, const MarkovExpert& expert,
                                        const DecoderConfig& cfg, Concept kind, Rng& rng) {
  if (cfg.N < 1 || cfg.K_reach < 1) throw ModelError("budgets must be positive");
  const int H = env.H(), S = env.S(), A = env.A(), O = env.O(), n = env.n;
  const Pomdp& m = env.joint;
  EmpiricalModel counts = EmpiricalModel::empty(H, S, A, O);
  counts.N = static_cast<long>(cfg.N) * n;
  long used = 0;
  const bool ce = kind == Concept::kCE;
  std::vector<Mdp> mdps;
  for (int i = 0; i < n; ++i) mdps.push_back(ce ? extended_mdp(env, expert, i) : unilateral_mdp(env, expert, i));
  for (int h = 1; h <= H; ++h)
    for (int target = 0; target < S; ++target)
      for (int i = 0; i < n; ++i) {
        const int Ai = env.Ai[i];
        std::vector<bool> targets(mdps[i].S, false);
        for (int x = 0; x < mdps[i].S; ++x) targets[x] = (ce ? x / Ai : x) == target;
        ReachResult psi = reach_policy(mdps[i], h, targets, cfg.K_reach, cfg.delta, rng);
        used += psi.episodes_used;
        counts.reach_estimates[static_cast<std::size_t>(h - 1) * S + target] =
            std::max(counts.reach_estimates[static_cast<std::size_t>(h - 1) * S + target],
                     psi.reach_estimate);
        for (int a = 0; a < A; ++a)
          for (int k = 0; k < cfg.N; ++k) {
            int s = sample_categorical(m.mu1, rng);
            for (int t = 1; t < h; ++t) {
              int rec = sample_categorical(expert.joint_row(t, s), rng);
              int x = ce ? s * Ai + env.action_of(rec, i) : s;
              int b = sample_categorical(psi.policy.row(t, x), Ai, rng);
              s = sample_categorical(m.t_row(t, s, replace_digit(rec, env.Ai, i, b)), S, rng);
            }
            int o = sample_categorical(m.obs_row(h, s), O, rng);
            int sn = sample_categorical(m.t_row(h, s, a), S, rng);
            counts.record(h, s, o, a, sn);
            ++used;
          }
      }
  ModelEstimate est = estimate_model(counts, m.r, m.mu1);
  Posg ghat = env;
  ghat.joint = est.model;
  counts.episodes_used = used;
  return MultiAgentDecoders{std::move(counts), DecoderPosterior(std::move(ghat)), used};
}

DistilledJointPolicy::DistilledJointPolicy(const Posg& g, MarkovExpert expert,
                                           const DecoderPosterior* decoders)
    : n_(g.n), S_(g.S()), A_(g.A()), Ai_(g.Ai), expert_(std::move(expert)), decoders_(decoders) {}

void DistilledJointPolicy::dist(int h, int, const std::vector<int>& obs,
                                const std::vector<int>& acts, double* out) const {
  std::vector<Belief> dec;
  for (int j = 0; j < n_; ++j) dec.push_back(decoders_->get(j, h, obs, acts));
  std::fill(out, out + A_, 0.0);
  const int R = expert_.num_rounds();
  std::vector<Dist> q(n_);
  for (int t = 0; t < R; ++t) {
    for (int j = 0; j < n_; ++j) {
      q[j].assign(Ai_[j], 0.0);
      for (int s = 0; s < S_; ++s) {
        if (dec[j][s] == 0.0) continue;
        for (int b = 0; b < Ai_[j]; ++b) q[j][b] += dec[j][s] * expert_.agent_prob(t, j, h, s, b);
      }
    }
    for (int a = 0; a < A_; ++a) {
      double w = 1.0;
      for (int j = 0; j < n_ && w > 0.0; ++j) w *= q[j][digit_of(a, Ai_, j)];
      out[a] += w / R;
    }
  }
}

DistilledJointPolicy distill_equilibrium(const Posg& g, const MarkovExpert& expert,
                                         const DecoderPosterior& decoders) {
  return DistilledJointPolicy(g, expert, &decoders);
}

double max_decode_failure(const Posg& g, const JointPolicy& base,
                          const DecoderPosterior& decoders, Concept kind,
                          const GapOptions& opts) {
  GameTree t = build_tree(g, base, opts.node_cap);
  // fail[h-1][node][j]
  std::vector<std::vector<Dist>> fail(t.levels.size());
  for (std::size_t h = 0; h < t.levels.size(); ++h)
    for (const Node& v : t.levels[h]) {
      Dist f(g.n);
      for (int j = 0; j < g.n; ++j)
        f[j] = 1.0 - decoders.get(j, v.h, v.obs, v.acts)[v.s];
      fail[h].push_back(f);
    }
  // Node identity inside the reward: recover the index by address.
  double worst = 0.0;
  bool exhaustive = true;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int h = 1; h <= g.H(); ++h) {
        const auto& level = t.levels[h - 1];
        NodeReward rew = [&, j, h](const Node& v, int) {
          if (v.h != h) return 0.0;
          return fail[h - 1][static_cast<std::size_t>(&v - level.data())][j];
        };
        double val = kind == Concept::kCE ? ce_best(t, i, rew, opts.ce_combo_cap, &exhaustive)
                                             : best_response(t, i, rew);
        worst = std::max(worst, val);
      }
  return worst;
}

}  // namespace privrl
