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
#include "privrl/core_models.hpp"
#include "privrl/harness.hpp"

using namespace privrl;

TEST_CASE("generated models validate and corruption is reported") {
  for (auto kind : {InstanceKind::kGeneric, InstanceKind::kDeterministicTransition,
                    InstanceKind::kBlockMdp}) {
    Pomdp m = gen_pomdp(kind, 2, 2, 4, 3, 11);
    CHECK(validate_model(m).empty());
    m.obs_row(2, 1)[0] += 0.1;
    auto rep = validate_model(m);
    REQUIRE(rep.size() == 1);
    CHECK(rep[0].deviation == doctest::Approx(0.1));
  }
  Pomdp bad = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 2, 1);
  bad.reward(1, 0, 0) = 1.5;
  CHECK_FALSE(validate_model(bad).empty());
}

TEST_CASE("block instances reject O < S") {
  CHECK_THROWS_AS(gen_pomdp(InstanceKind::kBlockMdp, 3, 2, 2, 3, 0), ModelError);
}

TEST_CASE("json round trip is lossless") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 3, 2, 2, 3, 5);
  auto doc = parse_model_json(to_json(m));
  REQUIRE(doc.kind == "pomdp");
  CHECK(doc.pomdp.T == m.T);
  CHECK(doc.pomdp.Obs == m.Obs);
  CHECK(doc.pomdp.r == m.r);
  CHECK(doc.pomdp.mu1 == m.mu1);

  Mdp d = mdp_of(m);
  auto doc2 = parse_model_json(to_json(d));
  REQUIRE(doc2.kind == "mdp");
  CHECK(doc2.mdp.T == d.T);

  PosgSpec spec;
  spec.kind = "matching_pennies";
  spec.H = 2;
  Posg g = gen_posg(spec, 0);
  auto doc3 = parse_model_json(to_json(g));
  REQUIRE(doc3.kind == "posg");
  CHECK(doc3.posg.ri == g.ri);
  CHECK(doc3.posg.is_zero_sum());
}

TEST_CASE("malformed json throws ModelError") {
  CHECK_THROWS_AS(parse_model_json("{"), ModelError);
  CHECK_THROWS_AS(parse_model_json(R"({"kind":"pomdp","H":1})"), ModelError);
}

TEST_CASE("memory codec round trips and counts keys") {
  MemoryCodec c(2, 3, 2);
  std::vector<int> obs{1, 0, 1, 1}, acts{2, 0, 1};
  std::uint64_t key = c.init(obs[0]);
  for (int h = 1; h < 4; ++h) {
    key = c.next(h, key, acts[h - 1], obs[h]);
    FiniteMemory z = make_memory(2, std::vector<int>(obs.begin(), obs.begin() + h + 1),
                                 std::vector<int>(acts.begin(), acts.begin() + h));
    CHECK(c.encode(z) == key);
    FiniteMemory back = c.decode(h + 1, key);
    CHECK(back.obs == z.obs);
    CHECK(back.actions == z.actions);
  }
  CHECK(c.count(1) == 2.0);
  CHECK(c.count(2) == 2.0 * 6.0);
  CHECK(c.count(5) == 36.0);
  CHECK_THROWS_AS(MemoryCodec(0, 2, 2), ModelError);
}

TEST_CASE("posg index helpers are inverse") {
  Posg g = make_posg(1, 2, {2, 3}, {3, 2}, Sharing::kFull);
  for (int a = 0; a < g.A(); ++a) {
    std::vector<int> parts{g.action_of(a, 0), g.action_of(a, 1)};
    CHECK(g.join_actions(parts) == a);
  }
  for (int o = 0; o < g.O(); ++o) {
    std::vector<int> parts{g.obs_of(o, 0), g.obs_of(o, 1)};
    CHECK(g.join_obs(parts) == o);
  }
}

TEST_CASE("exact evaluation matches trajectory enumeration") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Pomdp m = gen_pomdp(InstanceKind::kGeneric, 3, 2, 2, 3, seed);
    for (int L = 1; L <= 3; ++L) {
      auto pi = oracle::random_memory_policy(m.H, m.A, m.O, L, seed * 7 + L);
      CHECK(evaluate_policy_exact(m, pi) ==
            doctest::Approx(oracle::value_by_enumeration(m, pi)).epsilon(1e-12));
    }
    RandomHistoryPolicy hist(m.H, m.S, m.A, m.O, true, seed);
    CHECK(evaluate_policy_exact(m, hist) ==
          doctest::Approx(oracle::value_by_enumeration(m, hist)).epsilon(1e-12));
  }
}

TEST_CASE("mixture value is the mean of member values") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, 3);
  auto a = std::make_shared<FiniteMemoryPolicy>(oracle::random_memory_policy(3, 2, 2, 1, 1));
  auto b = std::make_shared<FiniteMemoryPolicy>(oracle::random_memory_policy(3, 2, 2, 2, 2));
  MixturePolicy mix({a, b});
  double want = 0.5 * (evaluate_policy_exact(m, *a) + evaluate_policy_exact(m, *b));
  CHECK(evaluate_policy_exact(m, mix) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("Monte Carlo return agrees with exact value") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 4, 9);
  auto pi = oracle::random_memory_policy(4, 2, 2, 2, 4);
  Rng rng(123);
  const int n = 40000;
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    Trajectory t = sample_episode(m, pi, rng);
    CHECK(t.s.size() == 5u);
    for (double r : t.rewards) total += r;
  }
  // 4 rewards in [0,1]: sd <= 2, so 5 sd / sqrt(n) = 0.05.
  CHECK(std::abs(total / n - evaluate_policy_exact(m, pi)) < 0.05);
}

TEST_CASE("full history enumeration respects the cap") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 4, 6, 0);
  FullHistoryPolicy pi(6, 2, 2, 4, true);
  CHECK_THROWS_AS(evaluate_policy_exact(m, pi, 1000), CapExceeded);
}

TEST_CASE("state policy acts on the true state") {
  Pomdp m = Pomdp::zeros(1, 2, 2, 1);
  m.mu1 = {0.5, 0.5};
  m.obs_row(1, 0)[0] = m.obs_row(1, 1)[0] = 1.0;
  m.reward(1, 0, 1) = 1.0;
  m.reward(1, 1, 0) = 1.0;
  auto pi = StatePolicy::deterministic(1, 2, 2, {1, 0});
  CHECK(evaluate_policy_exact(m, pi) == doctest::Approx(1.0));
}
