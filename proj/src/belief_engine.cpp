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

#include "privrl/belief_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "privrl/lp.hpp"

namespace privrl {

Belief uniform_belief(int S) { return Belief(S, 1.0 / S); }

Belief bayes_update(const Belief& b, const Pomdp& model, int h, int o) {
  Belief out(model.S);
  double z = 0.0;
  for (int x = 0; x < model.S; ++x) {
    out[x] = model.obs_row(h, x)[o] * b[x];
    z += out[x];
  }
  if (!(z >= kMinLikelihood)) {
    std::ostringstream os;
    os << "observation " << o << " has zero likelihood at step " << h;
    throw ImpossibleObservation(os.str());
  }
  for (double& v : out) v /= z;
  return out;
}

Belief push_forward(const Belief& b, int a, const Pomdp& model, int h) {
  Belief out(model.S, 0.0);
  for (int x = 0; x < model.S; ++x) {
    if (b[x] == 0.0) continue;
    const double* t = model.t_row(h, x, a);
    for (int y = 0; y < model.S; ++y) out[y] += b[x] * t[y];
  }
  return out;
}

Belief belief_update(const Belief& b, int a, int o, const Pomdp& model, int h) {
  return bayes_update(push_forward(b, a, model, h), model, h + 1, o);
}

Belief exact_belief(const Pomdp& model, const std::vector<int>& obs,
                    const std::vector<int>& acts) {
  if (obs.empty()) return model.mu1;
  if (acts.size() + 1 != obs.size()) throw ModelError("history lengths inconsistent");
  Belief b = bayes_update(model.mu1, model, 1, obs[0]);
  for (std::size_t t = 1; t < obs.size(); ++t)
    b = belief_update(b, acts[t - 1], obs[t], model, static_cast<int>(t));
  return b;
}

Belief approx_belief(const Pomdp& model, const FiniteMemory& z, const Belief& prior) {
  if (z.L < 1) throw ModelError("memory length must be at least 1");
  const int len = static_cast<int>(z.obs.size());
  if (z.h <= z.L) {
    Belief b = bayes_update(model.mu1, model, 1, z.obs[0]);
    for (int j = 1; j < len; ++j) b = belief_update(b, z.actions[j], z.obs[j], model, j);
    return b;
  }
  Belief b = prior.empty() ? uniform_belief(model.S) : prior;
  const int start = z.h - z.L;
  for (int j = 0; j < len; ++j) b = belief_update(b, z.actions[j], z.obs[j], model, start + j);
  return b;
}

ApproxBeliefTable::ApproxBeliefTable(Pomdp model, int L, std::vector<Belief> step_priors,
                                     Provenance provenance, bool reset_on_impossible)
    : model_(std::move(model)),
      codec_(L, model_.A, model_.O),
      priors_(std::move(step_priors)),
      provenance_(provenance),
      reset_on_impossible_(reset_on_impossible),
      memo_(model_.H) {
  if (static_cast<int>(priors_.size()) != model_.H + 1)
    throw ModelError("need one prior per step (index 0 unused)");
}

ApproxBeliefTable ApproxBeliefTable::exact(const Pomdp& model, int L) {
  std::vector<Belief> priors(model.H + 1, uniform_belief(model.S));
  return ApproxBeliefTable(model, L, std::move(priors), Provenance::kExactModel, false);
}

const Belief& ApproxBeliefTable::get(int h, std::uint64_t key) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_[h - 1].find(key);
    if (it != memo_[h - 1].end()) return it->second;
  }
  Belief b = compute(h, key);
  std::lock_guard<std::mutex> lock(mu_);
  // Insert-once: a concurrent writer may have won; keep its value.
  return memo_[h - 1].emplace(key, std::move(b)).first->second;
}

Belief ApproxBeliefTable::compute(int h, std::uint64_t key) const {
  FiniteMemory z = codec_.decode(h, key);
  if (!reset_on_impossible_) {
    return approx_belief(model_, z, z.h > z.L ? priors_[z.h - z.L] : Belief{});
  }
  const int len = static_cast<int>(z.obs.size());
  const bool full = z.h <= z.L;
  const int start = full ? 1 : z.h - z.L;
  Belief b;
  int j0 = 0;
  if (full) {
    try {
      b = bayes_update(model_.mu1, model_, 1, z.obs[0]);
    } catch (const ImpossibleObservation&) {
      b = priors_[1];
      std::lock_guard<std::mutex> lock(mu_);
      ++resets_;
    }
    j0 = 1;
  } else {
    b = priors_[start];
  }
  for (int j = j0; j < len; ++j) {
    int step = full ? j : start + j;  // step of the transition
    try {
      b = belief_update(b, z.actions[j], z.obs[j], model_, step);
    } catch (const ImpossibleObservation&) {
      b = priors_[step + 1];
      std::lock_guard<std::mutex> lock(mu_);
      ++resets_;
    }
  }
  return b;
}

std::size_t ApproxBeliefTable::reset_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return resets_;
}

std::string ApproxBeliefTable::to_json_debug(int h) const {
  nlohmann::json j = nlohmann::json::object();
  std::lock_guard<std::mutex> lock(mu_);
  for (auto& [key, b] : memo_[h - 1]) j[std::to_string(key)] = b;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Observability

namespace {

double pairwise_bound(const std::vector<double>& E, int S, int O) {
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < S; ++s)
    for (int t = s + 1; t < S; ++t) {
      double d = 0.0;
      for (int o = 0; o < O; ++o) d += std::abs(E[s * O + o] - E[t * O + o]);
      best = std::min(best, 0.5 * d);
    }
  return S < 2 ? 1.0 : best;
}

}  // namespace

ObservabilityEstimate estimate_observability(const std::vector<double>& E, int S, int O) {
  if (static_cast<int>(E.size()) != S * O) throw ModelError("emission size mismatch");
  for (int s = 0; s < S; ++s) {
    double sum = 0.0;
    for (int o = 0; o < O; ++o) {
      if (E[s * O + o] < -kStochTol) throw ModelError("emission has a negative entry");
      sum += E[s * O + o];
    }
    if (std::abs(sum - 1.0) > kStochTol) throw ModelError("emission row is not stochastic");
  }
  ObservabilityEstimate est;
  if (S < 2) {
    est.gamma = 1.0;
    est.exact = true;
    return est;
  }
  if (S > 12) {
    est.gamma = pairwise_bound(E, S, O);
    est.exact = false;
    return est;
  }
  // Minimize ||E' z||_1 over zero-sum z with ||z||_1 = 1. Within a fixed sign
  // pattern tau of z the l1 norm is linear, so each orthant is one LP in
  // (w = tau*z >= 0, t >= 0). Patterns with tau_0 = +1 suffice by symmetry.
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << (S - 1)); ++mask) {
    std::vector<double> tau(S, 1.0);
    for (int s = 1; s < S; ++s)
      if (mask & (1u << (s - 1))) tau[s] = -1.0;
    LinearProgram lp;
    lp.c.assign(S + O, 0.0);
    for (int o = 0; o < O; ++o) lp.c[S + o] = 1.0;
    std::vector<double> ones(S + O, 0.0), zero_sum(S + O, 0.0);
    for (int s = 0; s < S; ++s) {
      ones[s] = 1.0;
      zero_sum[s] = tau[s];
    }
    lp.A_eq = {ones, zero_sum};
    lp.b_eq = {1.0, 0.0};
    for (int o = 0; o < O; ++o) {
      std::vector<double> up(S + O, 0.0), down(S + O, 0.0);
      for (int s = 0; s < S; ++s) {
        up[s] = tau[s] * E[s * O + o];
        down[s] = -tau[s] * E[s * O + o];
      }
      up[S + o] = -1.0;
      down[S + o] = -1.0;
      lp.A_ub.push_back(up);
      lp.A_ub.push_back(down);
      lp.b_ub.push_back(0.0);
      lp.b_ub.push_back(0.0);
    }
    LpResult res = solve_lp(lp);
    if (res.status == LpStatus::kOptimal) best = std::min(best, res.objective);
  }
  est.gamma = std::max(0.0, best);
  est.exact = true;
  return est;
}

ObservabilityEstimate estimate_observability(const Pomdp& model, int h) {
  std::vector<double> E(model.obs_row(h, 0), model.obs_row(h, 0) + model.S * model.O);
  return estimate_observability(E, model.S, model.O);
}

}  // namespace privrl
