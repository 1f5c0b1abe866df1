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

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "privrl/asymmetric_ac.hpp"
#include "privrl/harness.hpp"

using namespace privrl;

namespace {

// Q_h(z, s, a) by direct recursion over (s', o').
double q_rec(const Pomdp& m, const FiniteMemoryPolicy& pi, int h, std::uint64_t key, int s,
             int a) {
  double q = m.reward(h, s, a);
  if (h == m.H) return q;
  Dist row(m.A);
  for (int sn = 0; sn < m.S; ++sn)
    for (int o = 0; o < m.O; ++o) {
      double p = m.t_row(h, s, a)[sn] * m.obs_row(h + 1, sn)[o];
      if (p == 0.0) continue;
      std::uint64_t k2 = pi.codec().next(h, key, a, o);
      pi.dist(h + 1, k2, sn, row.data());
      for (int b = 0; b < m.A; ++b) q += p * row[b] * q_rec(m, pi, h + 1, k2, sn, b);
    }
  return q;
}

}  // namespace

TEST_CASE("exact Q matches direct recursion and the policy value") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, seed);
    for (int L = 1; L <= 2; ++L) {
      auto pi = oracle::random_memory_policy(3, 2, 2, L, seed + 40);
      MemoryStateQ q = exact_q(m, pi);
      for (int h = 1; h <= 3; ++h)
        for (auto key : q.keys[h - 1])
          for (int s = 0; s < 2; ++s)
            for (int a = 0; a < 2; ++a)
              CHECK(q.q(h, key, s, a) == doctest::Approx(q_rec(m, pi, h, key, s, a)).epsilon(1e-12));
      double v1 = 0.0;
      Dist row(2);
      for (int s = 0; s < 2; ++s)
        for (int o = 0; o < 2; ++o) {
          std::uint64_t key = pi.codec().init(o);
          pi.dist(1, key, s, row.data());
          for (int a = 0; a < 2; ++a)
            v1 += m.mu1[s] * m.obs_row(1, s)[o] * row[a] * q.q(1, key, s, a);
        }
      CHECK(v1 == doctest::Approx(evaluate_policy_exact(m, pi)).epsilon(1e-9));
      CHECK(optimism_violations(m, pi, q, 1e-9) == 0u);
    }
  }
}

TEST_CASE("exact Q with zero rewards and H = 1") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 2, 1);
  std::fill(m.r.begin(), m.r.end(), 0.0);
  auto pi = oracle::random_memory_policy(2, 2, 2, 1, 3);
  MemoryStateQ q = exact_q(m, pi);
  for (auto& step : q.table)
    for (auto& [k, row] : step)
      for (double x : row) CHECK(x == 0.0);

  Pomdp b = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 1, 2);
  auto pb = oracle::random_memory_policy(1, 2, 2, 1, 3);
  MemoryStateQ qb = exact_q(b, pb);
  for (auto key : qb.keys[0])
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) CHECK(qb.q(1, key, s, a) == b.reward(1, s, a));
}

TEST_CASE("memory keys enumerate the syntactic key space") {
  MemoryCodec c(2, 2, 3);
  auto keys = enumerate_memory_keys(c, 4, 2, 3);
  for (int h = 1; h <= 4; ++h) CHECK(static_cast<double>(keys[h - 1].size()) == c.count(h));
  CHECK_THROWS_AS(enumerate_memory_keys(c, 4, 2, 3, 10), CapExceeded);
}

TEST_CASE("optimistic Q stays within the clamp and is optimistic for large M") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, 7);
  auto pi = oracle::random_memory_policy(3, 2, 2, 2, 1);
  Rng rng(2);
  OptimisticQCounts counts;
  MemoryStateQ q = optimistic_q(m, pi, {500, 0.1, 2.0}, rng, &counts);
  CHECK(counts.episodes_used == 3 * 500);
  CHECK(q.delta1 == doctest::Approx(0.1 / (2 * 2 * 3)));
  for (int h = 1; h <= 3; ++h)
    for (auto& [k, row] : q.table[h - 1])
      for (double x : row) {
        CHECK(x >= 0.0);
        CHECK(x <= q.ceiling(h));
      }
  CHECK(optimism_violations(m, pi, q) == 0u);
}

TEST_CASE("bandit optimistic Q equals clamped reward plus bonus") {
  Pomdp m = Pomdp::zeros(1, 1, 2, 1);
  m.mu1 = {1.0};
  m.obs_row(1, 0)[0] = 1.0;
  m.t_row(1, 0, 0)[0] = m.t_row(1, 0, 1)[0] = 1.0;
  m.reward(1, 0, 0) = 0.2;
  m.reward(1, 0, 1) = 0.6;
  FiniteMemoryPolicy pi(1, 2, 1, 1);
  pi.set_row(1, 0, {0.5, 0.5});
  for (int M : {10, 1000, 100000}) {
    Rng rng(M);
    OptimisticQCounts counts;
    MemoryStateQ q = optimistic_q(m, pi, {M, 0.1, 2.0}, rng, &counts);
    double log_term = std::log(1.0 / (0.1 / (2.0 * 1 * 3)));
    for (int a = 0; a < 2; ++a) {
      long n = counts.n_sa[a];
      double bonus = std::min(2.0, 2.0 * std::sqrt(log_term / std::max(n, 1L)));
      CHECK(q.q(1, 0, 0, a) == doctest::Approx(std::min(1.0, m.reward(1, 0, a) + bonus)));
    }
  }
}

TEST_CASE("mwu update follows the Hedge formula") {
  Pomdp m = Pomdp::zeros(1, 1, 2, 1);
  m.mu1 = {1.0};
  m.obs_row(1, 0)[0] = 1.0;
  m.t_row(1, 0, 0)[0] = m.t_row(1, 0, 1)[0] = 1.0;
  m.reward(1, 0, 0) = 1.0;
  FiniteMemoryPolicy pi(1, 2, 1, 1);
  pi.set_row(1, 0, {0.5, 0.5});
  MemoryStateQ q = exact_q(m, pi);
  auto belief = ApproxBeliefTable::exact(m, 1);
  FiniteMemoryPolicy next = mwu_update(pi, q, belief, 1.0);
  Dist row(2);
  next.dist(1, 0, 0, row.data());
  CHECK(row[0] == doctest::Approx(0.73106).epsilon(1e-5));
  CHECK(row[1] == doctest::Approx(0.26894).epsilon(1e-5));
  FiniteMemoryPolicy same = mwu_update(pi, q, belief, 0.0);
  same.dist(1, 0, 0, row.data());
  CHECK(row == Dist{0.5, 0.5});
  CHECK_THROWS_AS(mwu_update(pi, q, belief, -1.0), ModelError);
}

TEST_CASE("mwu update is synchronous over every key") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 3, 2, 2, 3, 12);
  auto pi = oracle::random_memory_policy(3, 2, 2, 2, 5);
  MemoryStateQ q = exact_q(m, pi);
  auto belief = ApproxBeliefTable::exact(m, 2);
  const double eta = 0.7;
  FiniteMemoryPolicy next = mwu_update(pi, q, belief, eta);
  Dist prev(2), got(2);
  for (int h = 1; h <= 3; ++h)
    for (auto key : q.keys[h - 1]) {
      const Belief* b = nullptr;
      try {
        b = &belief.get(h, key);
      } catch (const ImpossibleObservation&) {
        continue;
      }
      pi.dist(h, key, 0, prev.data());
      Dist want(2);
      double z = 0.0;
      for (int a = 0; a < 2; ++a) {
        double score = 0.0;
        for (int s = 0; s < 3; ++s) score += (*b)[s] * q.q(h, key, s, a);
        z += (want[a] = prev[a] * std::exp(eta * score));
      }
      for (auto& x : want) x /= z;
      next.dist(h, key, 0, got.data());
      CHECK(oracle::linf(got, want) <= 1e-12);
    }
}

TEST_CASE("npg with eta = 0 returns the uniform policy") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 2, 3);
  auto belief = ApproxBeliefTable::exact(m, 1);
  QOracle exact = [&](const FiniteMemoryPolicy& p) { return exact_q(m, p); };
  NpgResult res = belief_weighted_npg(belief, exact, 1, 0.0);
  REQUIRE(res.iterates.size() == 1u);
  CHECK(evaluate_policy_exact(m, res.mixture()) ==
        doctest::Approx(evaluate_policy_exact(m, StatePolicy(2, 2, 2))));
  CHECK(default_eta(2, 100, 2) == doctest::Approx(std::sqrt(std::log(2.0) / 200)));
}

TEST_CASE("mixture value is the mean of iterate values") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 2, 8);
  auto belief = ApproxBeliefTable::exact(m, 1);
  QOracle exact = [&](const FiniteMemoryPolicy& p) { return exact_q(m, p); };
  NpgResult res = belief_weighted_npg(belief, exact, 10, 0.5);
  double mean = 0.0;
  for (auto& p : res.iterates) mean += evaluate_policy_exact(m, p) / 10.0;
  CHECK(std::abs(evaluate_policy_exact(m, res.mixture()) - mean) <= 1e-9);
}

TEST_CASE("exact-oracle npg is within the regret bound of the best memory policy") {
  const int H = 2, T = 400;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, H, 30 + seed);
    auto belief = ApproxBeliefTable::exact(m, 1);
    QOracle exact = [&](const FiniteMemoryPolicy& p) { return exact_q(m, p); };
    double eta = default_eta(2, T, H);
    NpgResult res = belief_weighted_npg(belief, exact, T, eta);
    double avg = evaluate_policy_exact(m, res.mixture());
    double best = best_deterministic_memory_policy(m, 1).value;
    CHECK(avg >= best - 2 * H * std::sqrt(H * std::log(2.0) / T) - 1e-6);
  }
}

TEST_CASE("sampled npg reports its episode usage") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 2, 4);
  auto belief = ApproxBeliefTable::exact(m, 1);
  Rng rng(0);
  NpgResult res = belief_weighted_npg(m, belief, 3, 0.1, {50, 0.1, 2.0}, rng);
  CHECK(res.iterates.size() == 3u);
  CHECK(res.episodes_used == 3L * 2 * 50);
}
