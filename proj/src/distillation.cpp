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

#include "privrl/distillation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "privrl/baselines.hpp"

namespace privrl {

// ---------------------------------------------------------------------------
// Deterministic filter check

namespace {

bool one_hot(const Belief& b) {
  for (double v : b)
    if (v > 1e-9 && v < 1.0 - 1e-9) return false;
  return true;
}

struct FilterWalker {
  const Pomdp& m;
  std::size_t cap;
  FilterCheck out;
  std::vector<int> obs, acts;

  bool visit(const Belief& b) {
    if (++out.histories > cap) throw CapExceeded("reachable history count exceeds cap");
    if (!one_hot(b)) {
      out.is_filter = false;
      out.witness_obs = obs;
      out.witness_acts = acts;
      return false;
    }
    const int h = static_cast<int>(obs.size());
    if (h == m.H) return true;
    for (int a = 0; a < m.A; ++a) {
      Belief pushed = push_forward(b, a, m, h);
      for (int o = 0; o < m.O; ++o) {
        double like = 0.0;
        for (int s = 0; s < m.S; ++s) like += pushed[s] * m.obs_row(h + 1, s)[o];
        if (like < kMinLikelihood) continue;
        obs.push_back(o);
        acts.push_back(a);
        bool ok = visit(bayes_update(pushed, m, h + 1, o));
        obs.pop_back();
        acts.pop_back();
        if (!ok) return false;
      }
    }
    return true;
  }
};

}  // namespace

FilterCheck is_deterministic_filter(const Pomdp& model, std::size_t cap) {
  FilterWalker w{model, cap, {}, {}, {}};
  for (int o = 0; o < model.O; ++o) {
    double like = 0.0;
    for (int s = 0; s < model.S; ++s) like += model.mu1[s] * model.obs_row(1, s)[o];
    if (like < kMinLikelihood) continue;
    w.obs = {o};
    w.acts.clear();
    if (!w.visit(bayes_update(model.mu1, model, 1, o))) break;
  }
  return w.out;
}

// ---------------------------------------------------------------------------
// Decoders

DecoderTable::DecoderTable(int H, int S, int A, int O)
    : H_(H), S_(S), A_(A), O_(O), table_(H) {}

int DecoderTable::key(int h, int s_prev, int a_prev, int o) const {
  return h == 1 ? o : (s_prev * A_ + a_prev) * O_ + o;
}

int DecoderTable::lookup(int h, int s_prev, int a_prev, int o) const {
  auto& t = table_[h - 1];
  auto it = t.find(key(h, s_prev, a_prev, o));
  return it == t.end() ? unknown() : it->second;
}

void DecoderTable::store(int h, int s_prev, int a_prev, int o, int s) {
  auto [it, inserted] = table_[h - 1].emplace(key(h, s_prev, a_prev, o), s);
  if (!inserted && it->second != s) conflict_ = true;
}

std::size_t DecoderTable::size() const {
  std::size_t n = 0;
  for (auto& t : table_) n += t.size();
  return n;
}

std::string DecoderTable::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (int h = 1; h <= H_; ++h) {
    std::vector<std::pair<int, int>> items(table_[h - 1].begin(), table_[h - 1].end());
    std::sort(items.begin(), items.end());
    for (auto& [k, s] : items) {
      int o = k % O_;
      int rest = k / O_;
      int a_prev = h == 1 ? -1 : rest % A_;
      int s_prev = h == 1 ? -1 : rest / A_;
      j.push_back({h, s_prev, a_prev, o, s});
    }
  }
  return j.dump();
}

DecoderTable DecoderTable::from_json(const std::string& text, int H, int S, int A, int O) {
  DecoderTable t(H, S, A, O);
  for (auto& e : nlohmann::json::parse(text))
    t.store(e[0].get<int>(), std::max(0, e[1].get<int>()), std::max(0, e[2].get<int>()),
            e[3].get<int>(), e[4].get<int>());
  return t;
}

DecoderTable learn_decoders(const Pomdp& env, const StatePolicy& expert, int M, Rng& rng) {
  if (M < 1) throw ModelError("M must be positive");
  DecoderTable t(env.H, env.S, env.A, env.O);
  for (int k = 0; k < M; ++k) {
    int s = sample_categorical(env.mu1, rng);
    int o = sample_categorical(env.obs_row(1, s), env.O, rng);
    t.store(1, 0, 0, o, s);
  }
  for (int h = 2; h <= env.H; ++h) {
    for (int k = 0; k < M; ++k) {
      Trajectory tr = sample_episode(env, expert, rng);
      t.store(h, tr.s[h - 2], tr.a[h - 2], tr.o[h - 1], tr.s[h - 1]);
    }
  }
  return t;
}

DecodedPolicy::DecodedPolicy(DecoderTable decoders, StatePolicy expert)
    : decoders_(std::move(decoders)), expert_(std::move(expert)) {}

std::uint64_t DecodedPolicy::init_key(int, int o1) const {
  return static_cast<std::uint64_t>(decoders_.lookup(1, 0, 0, o1));
}

std::uint64_t DecodedPolicy::next_key(int h, std::uint64_t key, int a, int, int o_next) const {
  const int unk = decoders_.unknown();
  if (static_cast<int>(key) == unk) return key;
  return static_cast<std::uint64_t>(decoders_.lookup(h + 1, static_cast<int>(key), a, o_next));
}

void DecodedPolicy::dist(int h, std::uint64_t key, int, double* out) const {
  const int A = expert_.num_actions();
  if (static_cast<int>(key) == decoders_.unknown()) {
    std::fill(out, out + A, 1.0 / A);
    return;
  }
  const double* row = expert_.row(h, static_cast<int>(key));
  std::copy(row, row + A, out);
}

DecodedPolicy compose_policy(const DecoderTable& decoders, const StatePolicy& expert) {
  return DecodedPolicy(decoders, expert);
}

double decode_failure_prob(const Pomdp& m, const StatePolicy& expert, const DecoderTable& g,
                           FailureMode mode, int samples, Rng* rng) {
  if (mode == FailureMode::kMonteCarlo) {
    if (!rng) throw ModelError("Monte Carlo mode needs a generator");
    long fails = 0;
    for (int k = 0; k < samples; ++k) {
      Trajectory tr = sample_episode(m, expert, *rng);
      bool failed = g.lookup(1, 0, 0, tr.o[0]) != tr.s[0];
      for (int h = 2; h <= m.H && !failed; ++h)
        failed = g.lookup(h, tr.s[h - 2], tr.a[h - 2], tr.o[h - 1]) != tr.s[h - 1];
      fails += failed ? 1 : 0;
    }
    return static_cast<double>(fails) / samples;
  }
  // Mass of trajectories that have decoded correctly so far.
  std::vector<double> ok(m.S, 0.0), nxt(m.S);
  for (int s = 0; s < m.S; ++s)
    for (int o = 0; o < m.O; ++o)
      if (g.lookup(1, 0, 0, o) == s) ok[s] += m.mu1[s] * m.obs_row(1, s)[o];
  for (int h = 1; h < m.H; ++h) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int s = 0; s < m.S; ++s) {
      if (ok[s] == 0.0) continue;
      for (int a = 0; a < m.A; ++a) {
        double w = ok[s] * expert.row(h, s)[a];
        if (w == 0.0) continue;
        const double* t = m.t_row(h, s, a);
        for (int sn = 0; sn < m.S; ++sn) {
          if (t[sn] == 0.0) continue;
          for (int o = 0; o < m.O; ++o)
            if (g.lookup(h + 1, s, a, o) == sn) nxt[sn] += w * t[sn] * m.obs_row(h + 1, sn)[o];
        }
      }
    }
    ok.swap(nxt);
  }
  double good = 0.0;
  for (double v : ok) good += v;
  return std::clamp(1.0 - good, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Expected distillation objective

Divergence Divergence::custom(std::function<double(double)> f, std::string name) {
  // Reject generators that fail a discrete convexity test on a log grid.
  std::vector<double> t;
  for (double x = -6.0; x <= 6.0 + 1e-12; x += 0.05) t.push_back(std::exp(x));
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    double l = (f(t[i]) - f(t[i - 1])) / (t[i] - t[i - 1]);
    double r = (f(t[i + 1]) - f(t[i])) / (t[i + 1] - t[i]);
    if (r < l - 1e-9 * (1.0 + std::abs(l))) throw ModelError("divergence generator is not convex");
  }
  Divergence d;
  d.kind = Kind::kCustomF;
  d.f = std::move(f);
  d.name = std::move(name);
  return d;
}

namespace {

constexpr double kQFloor = 1e-12;

double f_objective(const std::vector<Dist>& P, const Belief& b, const Dist& q,
                   const std::function<double(double)>& f) {
  double total = 0.0;
  for (std::size_t s = 0; s < P.size(); ++s) {
    if (b[s] == 0.0) continue;
    double d = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) {
      double qa = std::max(q[a], kQFloor);
      d += qa * f(P[s][a] / qa);
    }
    total += b[s] * d;
  }
  return total;
}

}  // namespace

Dist distill_row(const std::vector<Dist>& P, const Belief& b, const Divergence& div) {
  const std::size_t A = P.front().size();
  Dist q(A, 0.0);
  if (div.kind == Divergence::Kind::kForwardKL) {
    for (std::size_t s = 0; s < P.size(); ++s)
      for (std::size_t a = 0; a < A; ++a) q[a] += b[s] * P[s][a];
    return q;
  }
  // Projected gradient descent with backtracking; central-difference
  // gradients keep the generator a plain callable.
  std::fill(q.begin(), q.end(), 1.0 / A);
  double fq = f_objective(P, b, q, div.f);
  double step = 0.5;
  for (int it = 0; it < 50000; ++it) {
    Dist g(A);
    for (std::size_t a = 0; a < A; ++a) {
      double hstep = 1e-7 * std::max(q[a], 1e-4);
      Dist up = q, dn = q;
      up[a] += hstep;
      dn[a] = std::max(0.0, dn[a] - hstep);
      g[a] = (f_objective(P, b, up, div.f) - f_objective(P, b, dn, div.f)) / (up[a] - dn[a]);
    }
    bool moved = false;
    while (step > 1e-16) {
      Dist cand(A);
      for (std::size_t a = 0; a < A; ++a) cand[a] = q[a] - step * g[a];
      cand = project_simplex(cand);
      double fc = f_objective(P, b, cand, div.f);
      if (fc < fq - 1e-15) {
        double change = 0.0;
        for (std::size_t a = 0; a < A; ++a) change = std::max(change, std::abs(cand[a] - q[a]));
        q = cand;
        fq = fc;
        moved = true;
        step *= 2.0;
        if (change < 1e-10) return q;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return q;
}

namespace {

struct DistillWalker {
  const Pomdp& m;
  const StatePolicy& expert;
  const Policy& behavior;
  const Divergence& div;
  std::size_t cap;
  FullHistoryPolicy out;
  std::set<std::pair<int, std::uint64_t>> done;
  std::size_t nodes = 0;
  std::vector<int> obs, acts, states;

  void at_history() {
    const int h = static_cast<int>(obs.size());
    std::uint64_t key = out.key_of(states, obs, acts);
    if (!done.insert({h, key}).second) return;
    Belief b = exact_belief(m, obs, acts);
    std::vector<Dist> rows(m.S, Dist(m.A));
    for (int s = 0; s < m.S; ++s) rows[s].assign(expert.row(h, s), expert.row(h, s) + m.A);
    out.set_row(h, key, distill_row(rows, b, div));
  }

  void walk(int s, std::uint64_t bkey) {
    if (++nodes > cap) throw CapExceeded("behavior trajectory count exceeds cap");
    at_history();
    const int h = static_cast<int>(obs.size());
    if (h == m.H) return;
    Dist pi(m.A);
    behavior.dist(h, bkey, s, pi.data());
    for (int a = 0; a < m.A; ++a) {
      if (pi[a] <= 0.0) continue;
      const double* t = m.t_row(h, s, a);
      for (int sn = 0; sn < m.S; ++sn) {
        if (t[sn] <= 0.0) continue;
        for (int o = 0; o < m.O; ++o) {
          if (m.obs_row(h + 1, sn)[o] <= 0.0) continue;
          obs.push_back(o);
          acts.push_back(a);
          states.push_back(sn);
          walk(sn, behavior.next_key(h, bkey, a, sn, o));
          obs.pop_back();
          acts.pop_back();
          states.pop_back();
        }
      }
    }
  }
};

}  // namespace

FullHistoryPolicy distill_expected_objective(const Pomdp& model, const StatePolicy& expert,
                                             const Policy& behavior, const Divergence& div,
                                             std::size_t cap) {
  if (std::pow(static_cast<double>(model.O) * model.A, model.H) > static_cast<double>(cap))
    throw CapExceeded("history enumeration exceeds cap");
  DistillWalker w{model, expert, behavior, div, cap,
                  FullHistoryPolicy(model.H, model.S, model.A, model.O, false), {}, 0, {}, {}, {}};
  for (int s = 0; s < model.S; ++s) {
    if (model.mu1[s] <= 0.0) continue;
    for (int o = 0; o < model.O; ++o) {
      if (model.obs_row(1, s)[o] <= 0.0) continue;
      w.obs = {o};
      w.acts.clear();
      w.states = {s};
      w.walk(s, behavior.init_key(s, o));
    }
  }
  return std::move(w.out);
}

Pomdp counterexample_pomdp(double gamma, double eps) {
  if (!(gamma > 0.0 && gamma < 1.0) || !(eps > 0.0 && eps < 1.0))
    throw ModelError("gamma and eps must lie in (0,1)");
  Pomdp m = Pomdp::zeros(1, 2, 2, 2);
  m.mu1 = {(1.0 - gamma) / (2.0 - gamma), 1.0 / (2.0 - gamma)};
  m.obs_row(1, 0)[0] = 1.0;
  m.obs_row(1, 0)[1] = 0.0;
  m.obs_row(1, 1)[0] = 1.0 - gamma;
  m.obs_row(1, 1)[1] = gamma;
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) m.t_row(1, s, a)[s] = 1.0;
  m.reward(1, 0, 0) = 1.0;
  m.reward(1, 1, 1) = eps;
  return m;
}

}  // namespace privrl
