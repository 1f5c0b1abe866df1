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

#include "privrl/model_learning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "privrl/mdp_oracle.hpp"

namespace privrl {

EmpiricalModel EmpiricalModel::empty(int H, int S, int A, int O) {
  EmpiricalModel m;
  m.H = H;
  m.S = S;
  m.A = A;
  m.O = O;
  m.n_s.assign(static_cast<std::size_t>(H) * S, 0);
  m.n_sa.assign(static_cast<std::size_t>(H) * S * A, 0);
  m.n_sas.assign(static_cast<std::size_t>(H) * S * A * S, 0);
  m.n_so.assign(static_cast<std::size_t>(H) * S * O, 0);
  m.n_first.assign(S, 0);
  m.reach_estimates.assign(static_cast<std::size_t>(H) * S, 0.0);
  return m;
}

void EmpiricalModel::record(int h, int st, int o, int a, int s_next) {
  std::size_t hs = static_cast<std::size_t>(h - 1) * S + st;
  ++n_s[hs];
  ++n_so[hs * O + o];
  std::size_t k = sa_index(h, st, a);
  ++n_sa[k];
  ++n_sas[k * S + s_next];
}

bool EmpiricalModel::consistent() const {
  for (int h = 1; h <= H; ++h)
    for (int st = 0; st < S; ++st) {
      std::size_t hs = static_cast<std::size_t>(h - 1) * S + st;
      long sum_a = 0, sum_o = 0;
      for (int a = 0; a < A; ++a) {
        std::size_t k = sa_index(h, st, a);
        long sum_n = 0;
        for (int sn = 0; sn < S; ++sn) sum_n += n_sas[k * S + sn];
        if (sum_n != n_sa[k]) return false;
        sum_a += n_sa[k];
      }
      for (int o = 0; o < O; ++o) sum_o += n_so[hs * O + o];
      if (sum_a != n_s[hs] || sum_o != n_s[hs]) return false;
    }
  return true;
}

EmpiricalModel explore_and_count(const Pomdp& env, const ExploreConfig& cfg, Rng& rng) {
  if (cfg.N < 1 || cfg.K_reach < 1) throw ModelError("exploration budgets must be positive");
  EmpiricalModel m = EmpiricalModel::empty(env.H, env.S, env.A, env.O);
  m.N = cfg.N;
  const Mdp mdp = mdp_of(env);
  for (int h = 1; h <= env.H; ++h) {
    for (int target = 0; target < env.S; ++target) {
      ReachResult psi = reach_policy(mdp, h, target, cfg.K_reach, cfg.delta, rng);
      m.episodes_used += psi.episodes_used;
      m.reach_estimates[static_cast<std::size_t>(h - 1) * env.S + target] = psi.reach_estimate;
      for (int a = 0; a < env.A; ++a) {
        for (int k = 0; k < cfg.N; ++k) {
          int s = sample_categorical(env.mu1, rng);
          ++m.n_first[s];
          int o = sample_categorical(env.obs_row(1, s), env.O, rng);
          for (int t = 1; t < h; ++t) {
            int at = sample_categorical(psi.policy.row(t, s), env.A, rng);
            s = sample_categorical(env.t_row(t, s, at), env.S, rng);
            o = sample_categorical(env.obs_row(t + 1, s), env.O, rng);
          }
          int sn = sample_categorical(env.t_row(h, s, a), env.S, rng);
          m.record(h, s, o, a, sn);
          ++m.episodes_used;
        }
      }
    }
  }
  return m;
}

ModelEstimate estimate_model(const EmpiricalModel& c, const std::vector<double>& reward,
                             const std::vector<double>& true_mu1) {
  ModelEstimate est;
  Pomdp& m = est.model;
  m = Pomdp::zeros(c.H, c.S, c.A, c.O);
  m.r = reward;
  est.zero_sa.assign(static_cast<std::size_t>(c.H) * c.S * c.A, false);
  est.zero_s.assign(static_cast<std::size_t>(c.H) * c.S, false);
  for (int h = 1; h <= c.H; ++h)
    for (int s = 0; s < c.S; ++s) {
      std::size_t hs = static_cast<std::size_t>(h - 1) * c.S + s;
      long ns = c.n_s[hs];
      double* orow = m.obs_row(h, s);
      if (ns == 0) {
        est.zero_s[hs] = true;
        std::fill(orow, orow + c.O, 1.0 / c.O);
      } else {
        for (int o = 0; o < c.O; ++o) orow[o] = static_cast<double>(c.n_so[hs * c.O + o]) / ns;
      }
      for (int a = 0; a < c.A; ++a) {
        std::size_t k = c.sa_index(h, s, a);
        double* trow = m.t_row(h, s, a);
        if (c.n_sa[k] == 0) {
          est.zero_sa[k] = true;
          std::fill(trow, trow + c.S, 1.0 / c.S);
        } else {
          for (int sn = 0; sn < c.S; ++sn)
            trow[sn] = static_cast<double>(c.n_sas[k * c.S + sn]) / c.n_sa[k];
        }
      }
    }
  if (!true_mu1.empty()) {
    m.mu1 = true_mu1;
  } else {
    long total = 0;
    for (long v : c.n_first) total += v;
    for (int s = 0; s < c.S; ++s)
      m.mu1[s] = total == 0 ? 1.0 / c.S : static_cast<double>(c.n_first[s]) / total;
  }
  return est;
}

std::vector<int> TruncatedModel::high_states(int h) const {
  std::vector<int> out;
  for (int s = 0; s < model.S; ++s)
    if (!low[h - 1][s]) out.push_back(s);
  return out;
}

std::string TruncatedModel::to_json() const {
  nlohmann::json j = nlohmann::json::parse(privrl::to_json(model));
  nlohmann::json lows = nlohmann::json::array();
  for (int h = 1; h <= model.H; ++h) {
    std::vector<int> l;
    for (int s = 0; s < model.S; ++s)
      if (low[h - 1][s]) l.push_back(s);
    lows.push_back(l);
  }
  j["truncation"] = {{"eps", eps}, {"low", lows}};
  return j.dump();
}

namespace {

void redirect(double* row, int S, const std::vector<bool>& low, int n_high) {
  double moved = 0.0;
  for (int s = 0; s < S; ++s)
    if (low[s]) {
      moved += row[s];
      row[s] = 0.0;
    }
  for (int s = 0; s < S; ++s)
    if (!low[s]) row[s] += moved / n_high;
}

}  // namespace

TruncatedModel truncate_model(const Pomdp& estimate, const EmpiricalModel& counts, double eps) {
  TruncatedModel tm;
  tm.model = estimate;
  tm.eps = eps;
  const int H = estimate.H, S = estimate.S;
  const double denom = static_cast<double>(counts.N) * counts.A;
  tm.low.assign(H, std::vector<bool>(S, false));
  for (int h = 1; h <= H; ++h) {
    int n_high = 0;
    for (int s = 0; s < S; ++s) {
      double frac = denom > 0.0 ? counts.s(h, s) / denom : 0.0;
      tm.low[h - 1][s] = frac <= eps;
      if (!tm.low[h - 1][s]) ++n_high;
    }
    if (n_high == 0) {
      std::ostringstream os;
      os << "truncation leaves no high state at step " << h;
      throw TruncationFailure(os.str());
    }
  }
  auto n_high_at = [&](int h) {
    return static_cast<int>(std::count(tm.low[h - 1].begin(), tm.low[h - 1].end(), false));
  };
  redirect(tm.model.mu1.data(), S, tm.low[0], n_high_at(1));
  for (int h = 1; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < estimate.A; ++a)
        redirect(tm.model.t_row(h, s, a), S, tm.low[h], n_high_at(h + 1));
  return tm;
}

ApproxBeliefTable build_approx_belief(const TruncatedModel& tm, int L) {
  std::vector<Belief> priors(tm.model.H + 1);
  priors[0] = uniform_belief(tm.model.S);
  for (int h = 1; h <= tm.model.H; ++h) {
    auto high = tm.high_states(h);
    Belief b(tm.model.S, 0.0);
    for (int s : high) b[s] = 1.0 / static_cast<double>(high.size());
    priors[h] = b;
  }
  return ApproxBeliefTable(tm.model, L, std::move(priors),
                           ApproxBeliefTable::Provenance::kLearnedTruncated, true);
}

TheoryDefaults theory_defaults(int S, int A, int O, int H, double gamma, double eps,
                               double delta) {
  (void)A;
  auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (!in_unit(gamma) || !in_unit(eps) || !in_unit(delta))
    throw ModelError("gamma, eps and delta must lie in (0,1)");
  TheoryDefaults d;
  d.eps1 = eps / (static_cast<double>(H) * H * S);
  d.N = static_cast<long>(
      std::ceil(8.0 * O * std::log(static_cast<double>(S) * H / delta) / (gamma * gamma * d.eps1)));
  d.L = std::max(1, static_cast<int>(std::ceil(std::pow(gamma, -4.0) *
                                               std::log(static_cast<double>(S) * H / eps))));
  return d;
}

}  // namespace privrl
