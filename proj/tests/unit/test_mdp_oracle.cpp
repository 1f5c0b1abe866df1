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
#include "privrl/distillation.hpp"
#include "privrl/harness.hpp"
#include "privrl/mdp_oracle.hpp"

using namespace privrl;

namespace {

// Two states, H=2. Action 1 moves to state 1 with probability 0.9; action 0
// stays in state 0.
Mdp switch_mdp() {
  Mdp m = Mdp::zeros(2, 2, 2);
  m.mu1 = {1.0, 0.0};
  for (int h = 1; h <= 2; ++h)
    for (int s = 0; s < 2; ++s) {
      m.t_row(h, s, 0)[0] = 1.0;
      m.t_row(h, s, 1)[1] = 0.9;
      m.t_row(h, s, 1)[0] = 0.1;
    }
  return m;
}

}  // namespace

TEST_CASE("value iteration on the induced MDP of the counterexample") {
  for (double g : {0.2, 0.5, 0.8})
    for (double e : {0.1, 0.5, 0.9}) {
      Mdp d = mdp_of(counterexample_pomdp(g, e));
      CHECK(d.reward(1, 0, 0) == 1.0);
      CHECK(d.reward(1, 1, 1) == doctest::Approx(e));
      QTable q = value_iteration(d);
      CHECK(q.value(d.mu1) == doctest::Approx((1 - g + e) / (2 - g)).epsilon(1e-12));
    }
}

TEST_CASE("zero reward gives zero Q and bandit picks argmax") {
  Mdp z = Mdp::zeros(3, 2, 2);
  z.mu1 = {1.0, 0.0};
  for (int h = 1; h <= 3; ++h)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) z.t_row(h, s, a)[s] = 1.0;
  QTable q = value_iteration(z);
  for (double x : q.Q) CHECK(x == 0.0);

  Mdp b = Mdp::zeros(1, 1, 3);
  b.mu1 = {1.0};
  for (int a = 0; a < 3; ++a) b.t_row(1, 0, a)[0] = 1.0;
  b.reward(1, 0, 0) = 0.2;
  b.reward(1, 0, 1) = 0.7;
  b.reward(1, 0, 2) = 0.7;
  Dist row(3);
  value_iteration(b).greedy().dist(1, 0, 0, row.data());
  CHECK(row == Dist{0.0, 1.0, 0.0});
}

TEST_CASE("optimal state value dominates every history policy") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, seed);
    double vstar = value_iteration(mdp_of(m)).value(m.mu1);
    for (std::uint64_t k = 0; k < 5; ++k) {
      RandomHistoryPolicy pi(m.H, m.S, m.A, m.O, false, seed * 31 + k);
      CHECK(vstar >= evaluate_policy_exact(m, pi) - 1e-12);
    }
  }
}

TEST_CASE("Q values stay within [0, H-h+1]") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 3, 2, 2, 4, 3);
  QTable q = value_iteration(mdp_of(m));
  for (int h = 1; h <= 4; ++h)
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) {
        CHECK(q.q(h, s, a) >= 0.0);
        CHECK(q.q(h, s, a) <= 4 - h + 1);
      }
}

TEST_CASE("policy evaluation agrees with the POMDP evaluator") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 3, 2, 2, 3, 8);
  StatePolicy pi(3, 3, 2);
  pi.row(2, 1)[0] = 0.8;
  pi.row(2, 1)[1] = 0.2;
  Mdp d = mdp_of(m);
  CHECK(evaluate_state_policy(d, pi).value(d.mu1) ==
        doctest::Approx(evaluate_policy_exact(m, pi)).epsilon(1e-12));
}

TEST_CASE("occupancy rows are distributions and match sampling") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 3, 2, 2, 3, 21);
  StatePolicy pi(3, 3, 2);
  auto d = occupancy(mdp_of(m), pi);
  REQUIRE(d.size() == 3u);
  CHECK(oracle::linf(d[0], m.mu1) < 1e-15);
  for (auto& row : d) CHECK(oracle::sum(row) == doctest::Approx(1.0));

  Rng rng(2);
  const int n = 100000;
  std::vector<Dist> freq(3, Dist(3, 0.0));
  for (int k = 0; k < n; ++k) {
    auto t = sample_episode(m, pi, rng);
    for (int h = 0; h < 3; ++h) freq[h][t.s[h]] += 1.0 / n;
  }
  for (int h = 0; h < 3; ++h) CHECK(oracle::linf(freq[h], d[h]) < 0.02);
}

TEST_CASE("deterministic chain has indicator occupancies") {
  Mdp m = switch_mdp();
  for (int h = 1; h <= 2; ++h)
    for (int s = 0; s < 2; ++s) {
      m.t_row(h, s, 1)[1] = 1.0;
      m.t_row(h, s, 1)[0] = 0.0;
    }
  auto d = occupancy(m, StatePolicy::deterministic(2, 2, 2, {1, 1, 1, 1}));
  CHECK(d[1] == Dist{0.0, 1.0});
}

TEST_CASE("bonus is nonincreasing in the count") {
  double prev = ucb_bonus(1.0, 3, 2, 5, 100, 0.1, 0);
  CHECK(prev == doctest::Approx(ucb_bonus(1.0, 3, 2, 5, 100, 0.1, 1)));
  for (long n = 1; n < 500; ++n) {
    double b = ucb_bonus(1.0, 3, 2, 5, 100, 0.1, n);
    CHECK(b <= prev);
    prev = b;
  }
}

TEST_CASE("ucb-vi finds the optimal policy on a small MDP") {
  Mdp m = switch_mdp();
  std::vector<double> r(2 * 2 * 2, 0.0);
  r[(1 * 2 + 1) * 2 + 0] = r[(1 * 2 + 1) * 2 + 1] = 1.0;  // reward in state 1 at step 2
  Rng rng(4);
  auto res = ucb_vi(m, r, 2, {500, 0.1, 1.0}, rng);
  CHECK(res.episodes_used == 500);
  Dist row(2);
  res.policy.dist(1, 0, 0, row.data());
  CHECK(row[1] == 1.0);
}

TEST_CASE("reach policy on the switch MDP") {
  Mdp m = switch_mdp();
  int good = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    auto res = reach_policy(m, 2, 1, 2000, 0.1, rng);
    CHECK(res.reach_estimate >= 0.0);
    CHECK(res.reach_estimate <= 1.0);
    CHECK(res.episodes_used == 2000);
    if (res.reach_estimate >= 0.45) ++good;
  }
  CHECK(good >= 18);
}

TEST_CASE("reach extremes and errors") {
  Mdp m = switch_mdp();
  Rng rng(1);
  CHECK(reach_policy(m, 1, 0, 100, 0.1, rng).reach_estimate == 1.0);
  CHECK(reach_policy(m, 1, 1, 100, 0.1, rng).reach_estimate == 0.0);
  CHECK_THROWS_AS(reach_policy(m, 2, 1, 0, 0.1, rng), ModelError);
  CHECK_THROWS_AS(reach_policy(m, 3, 1, 10, 0.1, rng), ModelError);
}
