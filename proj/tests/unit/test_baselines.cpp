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
#include "privrl/baselines.hpp"
#include "privrl/harness.hpp"

using namespace privrl;

namespace {

Pomdp bandit() {
  Pomdp m = Pomdp::zeros(1, 1, 3, 1);
  m.mu1 = {1.0};
  m.obs_row(1, 0)[0] = 1.0;
  for (int a = 0; a < 3; ++a) m.t_row(1, 0, a)[0] = 1.0;
  m.reward(1, 0, 0) = 0.1;
  m.reward(1, 0, 1) = 0.9;
  m.reward(1, 0, 2) = 0.4;
  return m;
}

void check_rows(const FiniteMemoryPolicy& pi) {
  for (int h = 1; h <= pi.H(); ++h)
    for (auto& [k, row] : pi.rows(h)) {
      CHECK(oracle::sum(row) == doctest::Approx(1.0));
      for (double x : row) CHECK(x >= 0.0);
    }
}

}  // namespace

TEST_CASE("simplex projection") {
  CHECK(project_simplex({2.0, 0.0}) == Dist{1.0, 0.0});
  Dist d{0.2, 0.3, 0.5};
  CHECK(oracle::linf(project_simplex(d), d) < 1e-15);
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    Dist v(4);
    for (auto& x : v) x = 6.0 * uniform01(rng) - 3.0;
    Dist p = project_simplex(v);
    CHECK(oracle::sum(p) == doctest::Approx(1.0));
    for (double x : p) CHECK(x >= 0.0);
    // Optimality: no vertex-direction move reduces the distance.
    double base = 0.0;
    for (int i = 0; i < 4; ++i) base += (p[i] - v[i]) * (p[i] - v[i]);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        if (i == j || p[j] < 1e-3) continue;
        Dist q = p;
        q[i] += 1e-3;
        q[j] -= 1e-3;
        double dist = 0.0;
        for (int t = 0; t < 4; ++t) dist += (q[t] - v[t]) * (q[t] - v[t]);
        CHECK(dist >= base - 1e-12);
      }
  }
}

TEST_CASE("epsilon schedule") {
  CHECK(epsilon_schedule(5, 1) == 1.0);
  CHECK(epsilon_schedule(5, 6) == doctest::Approx(0.5454545).epsilon(1e-6));
  for (int H = 1; H <= 40; ++H) CHECK(epsilon_schedule(H, 1000000) < 1e-4);
}

TEST_CASE("vanilla aac with zero step stays uniform") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, 1);
  Rng rng(0);
  VanillaAacConfig cfg;
  cfg.T = 20;
  cfg.lambda = 0.0;
  auto res = vanilla_aac(m, cfg, rng);
  CHECK(res.episodes_used == 20L * cfg.K);
  Dist row(2);
  for (int h = 1; h <= 3; ++h)
    for (auto& [k, r] : res.policy.rows(h)) CHECK(oracle::linf(r, {0.5, 0.5}) < 1e-15);
  CHECK(evaluate_policy_exact(m, res.policy) ==
        doctest::Approx(evaluate_policy_exact(m, StatePolicy(3, 2, 2))));
}

TEST_CASE("vanilla aac solves a bandit") {
  Rng rng(3);
  VanillaAacConfig cfg;
  cfg.T = 300;
  cfg.K = 10;
  cfg.lambda = 0.1;
  cfg.alpha = 0.3;
  auto res = vanilla_aac(bandit(), cfg, rng);
  check_rows(res.policy);
  Dist row(3);
  res.policy.dist(1, 0, 0, row.data());
  CHECK(row[1] >= 0.9);
}

TEST_CASE("vanilla aac work is proportional to sampled keys") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 3, 4, 5);
  Rng rng(1);
  VanillaAacConfig cfg;
  cfg.T = 15;
  cfg.K = 3;
  auto res = vanilla_aac(m, cfg, rng);
  REQUIRE(res.actor_updates.size() == 15u);
  for (std::size_t t = 0; t < 15; ++t) {
    CHECK(res.actor_updates[t] == res.sampled_keys[t]);
    CHECK(res.sampled_keys[t] <= static_cast<std::size_t>(cfg.K * m.H));
  }
  check_rows(res.policy);
}

TEST_CASE("asymmetric q-learning solves a bandit and audits its updates") {
  Rng rng(2);
  QLearningConfig cfg;
  cfg.episodes = 3000;
  cfg.alpha = 0.1;
  auto res = asymmetric_q_learning(bandit(), cfg, rng);
  CHECK(res.episodes_used == 3000);
  CHECK(res.updates == 3000u);
  CHECK(res.critic_entries <= 3u);
  Dist row(3);
  res.policy.dist(1, 0, 0, row.data());
  CHECK(row[1] == 1.0);
}

TEST_CASE("baseline policies are valid on random instances") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Pomdp m = gen_pomdp(InstanceKind::kBlockMdp, 2, 2, 3, 5, seed);
    Rng rng(seed);
    auto q = asymmetric_q_learning(m, {200, 0.1, 3}, rng);
    check_rows(q.policy);
    CHECK(q.updates == 200u * 5u);
    double v = evaluate_policy_exact(m, q.policy);
    CHECK(v >= 0.0);
    CHECK(v <= 5.0);
  }
}
