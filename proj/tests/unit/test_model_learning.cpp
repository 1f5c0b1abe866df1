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
#include "privrl/harness.hpp"
#include "privrl/model_learning.hpp"

using namespace privrl;

TEST_CASE("exploration accounting and count consistency") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, 1);
  Rng rng(1);
  ExploreConfig cfg{20, 40, 0.1};
  EmpiricalModel c = explore_and_count(m, cfg, rng);
  CHECK(c.consistent());
  CHECK(c.episodes_used == 2L * 3 * 2 * 20 + 2L * 3 * 40);
  long total = 0;
  for (long v : c.n_sa) total += v;
  CHECK(total == 2L * 3 * 2 * 20);
  for (double p : c.reach_estimates) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  CHECK_THROWS_AS(explore_and_count(m, {0, 10, 0.1}, rng), ModelError);
}

TEST_CASE("single-path POMDP gives N*A counts per visited cell") {
  Pomdp m = gen_pomdp(InstanceKind::kDeterministicTransition, 3, 2, 2, 3, 4);
  // Make every action lead to the same next state so there is one path.
  for (int h = 1; h <= 3; ++h)
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) {
        double* row = m.t_row(h, s, a);
        std::fill(row, row + 3, 0.0);
        row[(s + 1) % 3] = 1.0;
      }
  Rng rng(2);
  EmpiricalModel c = explore_and_count(m, {1, 8, 0.1}, rng);
  int s = 0;
  while (m.mu1[s] != 1.0) ++s;
  for (int h = 1; h <= 3; ++h) {
    // One (h, target) batch per state; all of them land on the path state.
    CHECK(c.s(h, s) == 1L * 2 * 3);
    s = (s + 1) % 3;
  }
}

TEST_CASE("estimates recover deterministic rows and flag zero counts") {
  Pomdp m = gen_pomdp(InstanceKind::kDeterministicTransition, 2, 2, 2, 2, 7);
  Rng rng(3);
  EmpiricalModel c = explore_and_count(m, {200, 200, 0.1}, rng);
  ModelEstimate est = estimate_model(c, m.r);
  CHECK(validate_model(est.model).empty());
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      if (est.zero_sa[c.sa_index(1, s, a)]) {
        CHECK(est.model.t_row(1, s, a)[0] == 0.5);
        continue;
      }
      for (int sn = 0; sn < 2; ++sn) CHECK(est.model.t_row(1, s, a)[sn] == m.t_row(1, s, a)[sn]);
    }
  CHECK(est.model.mu1 == m.mu1);

  EmpiricalModel empty = EmpiricalModel::empty(1, 2, 2, 3);
  ModelEstimate e2 = estimate_model(empty, Dist(4, 0.0));
  CHECK(e2.zero_s[0]);
  CHECK(e2.model.obs_row(1, 0)[2] == doctest::Approx(1.0 / 3));
  CHECK(e2.model.mu1 == Dist{0.5, 0.5});
  ModelEstimate e3 = estimate_model(empty, Dist(4, 0.0), {0.3, 0.7});
  CHECK(e3.model.mu1 == Dist{0.3, 0.7});
}

TEST_CASE("row error concentrates") {
  // Every state reachable with probability 1 at step 1 under mu1 = delta.
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 3, 2, 2, 1, 12);
  m.mu1 = {1.0, 0.0, 0.0};
  const int N = 400;
  const double delta = 0.05;
  const double bound = 2.0 * std::sqrt(3 * std::log(1 / delta) / N);
  int ok = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    EmpiricalModel c = explore_and_count(m, {N, 10, 0.1}, rng);
    ModelEstimate est = estimate_model(c, m.r);
    Dist got(est.model.t_row(1, 0, 1), est.model.t_row(1, 0, 1) + 3);
    Dist want(m.t_row(1, 0, 1), m.t_row(1, 0, 1) + 3);
    if (oracle::l1(got, want) <= bound) ++ok;
  }
  CHECK(ok >= 95);
}

TEST_CASE("truncation redirects low mass uniformly") {
  Pomdp est = Pomdp::zeros(2, 3, 1, 1);
  est.mu1 = {0.5, 0.3, 0.2};
  for (int h = 1; h <= 2; ++h)
    for (int s = 0; s < 3; ++s) {
      est.obs_row(h, s)[0] = 1.0;
      double* row = est.t_row(h, s, 0);
      row[0] = 0.5;
      row[1] = 0.3;
      row[2] = 0.2;
    }
  EmpiricalModel c = EmpiricalModel::empty(2, 3, 1, 1);
  c.N = 100;
  c.n_s = {50, 30, 1, 50, 30, 1};
  TruncatedModel tm = truncate_model(est, c, 0.05);
  CHECK(tm.is_low(1, 2));
  CHECK(tm.high_states(2) == std::vector<int>{0, 1});
  CHECK(tm.model.mu1[0] == doctest::Approx(0.6));
  CHECK(tm.model.mu1[1] == doctest::Approx(0.4));
  CHECK(tm.model.mu1[2] == 0.0);
  CHECK(tm.model.t_row(1, 0, 0)[0] == doctest::Approx(0.6));
  CHECK(tm.model.t_row(1, 0, 0)[2] == 0.0);

  TruncatedModel none = truncate_model(est, c, 0.0);
  CHECK(none.model.T == est.T);

  EmpiricalModel dead = c;
  dead.n_s = {50, 30, 1, 0, 0, 0};
  CHECK_THROWS_AS(truncate_model(est, dead, 0.05), TruncationFailure);
}

TEST_CASE("redirected rows stay stochastic on random instances") {
  Rng rng(9);
  for (int k = 0; k < 1000; ++k) {
    Pomdp m = gen_pomdp(InstanceKind::kGeneric, 4, 2, 2, 2, k);
    EmpiricalModel c = EmpiricalModel::empty(2, 4, 2, 2);
    c.N = 10;
    for (auto& v : c.n_s) v = static_cast<long>(uniform01(rng) * 20);
    c.n_s[0] = c.n_s[4] = 20;  // keep one high state per step
    TruncatedModel tm = truncate_model(m, c, 0.3);
    CHECK(validate_model(tm.model).empty());
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 2; ++a)
        for (int sn = 0; sn < 4; ++sn)
          if (tm.is_low(2, sn)) CHECK(tm.model.t_row(1, s, a)[sn] == 0.0);
  }
}

TEST_CASE("approximate belief lives on high states") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 3, 2, 2, 3, 5);
  EmpiricalModel c = EmpiricalModel::empty(3, 3, 2, 2);
  c.N = 10;
  c.n_s = {20, 20, 0, 20, 0, 20, 0, 20, 20};
  TruncatedModel tm = truncate_model(m, c, 0.1);
  auto table = build_approx_belief(tm, 1);
  CHECK(table.provenance() == ApproxBeliefTable::Provenance::kLearnedTruncated);
  auto keys_h3 = std::vector<std::uint64_t>{};
  for (int o = 0; o < 2; ++o)
    for (int a = 0; a < 2; ++a) {
      FiniteMemory z = make_memory(1, {0, 1, o}, {0, a});
      const Belief& b = table.get(z);
      CHECK(oracle::sum(b) == doctest::Approx(1.0));
      CHECK(b[0] == 0.0);
    }
}

TEST_CASE("theory defaults follow the closed forms") {
  auto d = theory_defaults(2, 2, 3, 5, 0.5, 0.1, 0.1);
  double eps1 = 0.1 / (25.0 * 2);
  CHECK(d.eps1 == doctest::Approx(eps1));
  CHECK(d.N == static_cast<long>(std::ceil(8 * 3 * std::log(10 / 0.1) / (0.25 * eps1))));
  CHECK(d.L == static_cast<int>(std::ceil(16 * std::log(10 / 0.1))));
  CHECK_THROWS_AS(theory_defaults(2, 2, 3, 5, 0.0, 0.1, 0.1), ModelError);
}
