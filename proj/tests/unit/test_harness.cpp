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
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "privrl/asymmetric_ac.hpp"
#include "privrl/distillation.hpp"
#include "privrl/harness.hpp"

using namespace privrl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("privrl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("generators are deterministic and structured") {
  for (auto kind : {InstanceKind::kGeneric, InstanceKind::kDeterministicTransition,
                    InstanceKind::kBlockMdp}) {
    Pomdp a = gen_pomdp(kind, 2, 2, 3, 4, 42);
    Pomdp b = gen_pomdp(kind, 2, 2, 3, 4, 42);
    Pomdp c = gen_pomdp(kind, 2, 2, 3, 4, 43);
    CHECK(to_json(a) == to_json(b));
    CHECK(to_json(a) != to_json(c));
    CHECK(parse_instance_kind(instance_kind_name(kind)) == kind);
  }
  Pomdp det = gen_pomdp(InstanceKind::kDeterministicTransition, 3, 2, 3, 4, 1);
  for (double x : det.T) CHECK((x == 0.0 || x == 1.0));
  CHECK(std::count(det.mu1.begin(), det.mu1.end(), 1.0) == 1);

  Pomdp blk = gen_pomdp(InstanceKind::kBlockMdp, 3, 2, 5, 3, 2);
  for (int h = 1; h <= 3; ++h)
    for (int o = 0; o < 5; ++o) {
      int owners = 0;
      for (int s = 0; s < 3; ++s) owners += blk.obs_row(h, s)[o] > 0.0;
      CHECK(owners <= 1);
    }
  auto prof = observability_profile(blk);
  REQUIRE(prof.size() == 3u);
  for (auto& e : prof) CHECK(e.gamma == doctest::Approx(1.0));
  CHECK_THROWS_AS(parse_instance_kind("nope"), ModelError);
}

TEST_CASE("posg generators") {
  PosgSpec spec;
  spec.kind = "block";
  spec.H = 2;
  spec.S = 2;
  spec.Ai = {2, 2};
  spec.Oi = {3, 2};
  spec.zero_sum = true;
  Posg g = gen_posg(spec, 1);
  CHECK(validate_model(g).empty());
  CHECK(g.is_zero_sum());
  CHECK(g.O() == 6);
  spec.kind = "matching_pennies";
  Posg mp = gen_posg(spec, 0);
  CHECK(mp.S() == 1);
  CHECK(mp.reward(0, 1, 0, mp.join_actions({1, 1})) == 1.0);
  CHECK(mp.reward(1, 1, 0, mp.join_actions({1, 0})) == 1.0);
  spec.kind = "unknown";
  CHECK_THROWS_AS(gen_posg(spec, 0), ModelError);
}

TEST_CASE("trajectory enumeration is a distribution consistent with the value") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, 5);
  auto pi = oracle::random_memory_policy(3, 2, 2, 2, 8);
  auto trajs = enumerate_trajectories(m, pi);
  double total = 0.0, value = 0.0;
  for (auto& t : trajs) {
    total += t.prob;
    for (int h = 1; h <= 3; ++h) value += t.prob * m.reward(h, t.s[h - 1], t.a[h - 1]);
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(value == doctest::Approx(evaluate_policy_exact(m, pi)).epsilon(1e-12));
  CHECK(trajectory_l1(trajs, trajs) == 0.0);
  CHECK_THROWS_AS(enumerate_trajectories(m, pi, 10), CapExceeded);
}

TEST_CASE("trajectory bound is tight for identical models") {
  Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, 3);
  RandomHistoryPolicy pi(3, 2, 2, 2, false, 1);
  TrajBound tb = traj_bound(m, m, pi);
  CHECK(tb.tv == doctest::Approx(0.0));
  CHECK(tb.bound == doctest::Approx(0.0));
  CHECK(tb.belief_error == doctest::Approx(0.0));
  Pomdp q = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 3, 4);
  TrajBound tq = traj_bound(m, q, pi);
  CHECK(tq.slack_tv() >= -1e-10);
  CHECK(tq.slack_belief() >= -1e-10);
}

TEST_CASE("randomized inequality checks pass") {
  CHECK(check_inequalities(InequalityCase::kTraj, 30, 1).pass());
  CHECK(check_inequalities(InequalityCase::kTrick, 500, 2).pass());
  CHECK(check_inequalities(InequalityCase::kMask, 500, 3).pass());
  CHECK_THROWS_AS(parse_inequality_case("x"), ModelError);
}

TEST_CASE("trick and mask slack examples") {
  // Identical joints: both sides vanish.
  std::vector<std::vector<double>> P{{0.2, 0.3}, {0.1, 0.4}};
  CHECK(trick_slack(P, P) == doctest::Approx(0.0));
  CHECK(mask_slack({0.5, 0.5, 0.0}, {0.2, 0.3, 0.5}, {2}) >= 0.0);
}

TEST_CASE("memory brute force matches exhaustive search") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Pomdp m = gen_pomdp(InstanceKind::kGeneric, 2, 2, 2, 2, seed);
    auto bf = best_deterministic_memory_policy(m, 1);
    CHECK(bf.value == doctest::Approx(oracle::brute_force_memory(m, 1)).epsilon(1e-12));
    CHECK(evaluate_policy_exact(m, bf.policy) == doctest::Approx(bf.value));
    CHECK(bf.candidates > 0u);
    for (std::uint64_t k = 0; k < 5; ++k)
      CHECK(bf.value >= evaluate_policy_exact(m, oracle::random_memory_policy(2, 2, 2, 1, k)) - 1e-12);
  }
  Pomdp big = gen_pomdp(InstanceKind::kGeneric, 2, 2, 3, 4, 0);
  CHECK_THROWS_AS(best_deterministic_memory_policy(big, 3, 100), CapExceeded);
}

TEST_CASE("training wrappers stay within budget") {
  Pomdp m = gen_pomdp(InstanceKind::kDeterministicTransition, 2, 2, 3, 3, 1);
  AlgoParams params;
  for (const char* algo : {"distill", "npg", "qlearning", "vanilla_aac"}) {
    Rng rng(1);
    auto tp = train_algorithm(algo, m, 600, params, rng);
    REQUIRE(tp.policy);
    CHECK(tp.episodes_used <= 600);
    double v = evaluate_policy_exact(m, *tp.policy);
    CHECK(v >= 0.0);
    CHECK(v <= 3.0);
  }
  Rng rng(0);
  CHECK_THROWS_AS(train_algorithm("bogus", m, 100, params, rng), ModelError);
}

TEST_CASE("experiment config json and validation") {
  ExperimentConfig cfg;
  cfg.S = 3;
  cfg.seeds = {4, 5};
  cfg.algos = {"distill"};
  cfg.params.alpha_grid = {0.2};
  ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.S == 3);
  CHECK(back.params.alpha_grid == std::vector<double>{0.2});
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"budget": -1})"), ModelError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"algos": ["nope"]})"), ModelError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(R"({"instance_kind": "block_mdp", "S": 4, "O": 3})"),
                  ModelError);
  CHECK_THROWS_AS(ExperimentConfig::from_json("not json"), ModelError);
  CHECK(instance_seed(3, 7) == 3007u);
}

TEST_CASE("csv rows round trip") {
  RunRecord r{"npg", "block_mdp", 2, 2, 3, 5, 12, 400, "value", 0.1 + 0.2};
  CHECK(RunRecord::from_csv(r.to_csv()) == r);
  CHECK_THROWS_AS(RunRecord::from_csv("a,b"), ModelError);
  fs::path dir = scratch("csv");
  write_csv((dir / "x.csv").string(), {r, r});
  auto rows = read_csv((dir / "x.csv").string());
  REQUIRE(rows.size() == 2u);
  CHECK(rows[1] == r);
  CHECK(slurp(dir / "x.csv").rfind(kCsvHeader, 0) == 0);
}

TEST_CASE("experiments are reproducible and summarized") {
  ExperimentConfig cfg;
  cfg.instance_kind = "block_mdp";
  cfg.S = 2;
  cfg.A = 2;
  cfg.O = 3;
  cfg.H = 3;
  cfg.instances = 2;
  cfg.seeds = {1, 2};
  cfg.algos = {"distill", "qlearning"};
  cfg.budget = 300;
  cfg.checkpoints = 2;
  cfg.threads = 3;
  fs::path d1 = scratch("run1"), d2 = scratch("run2");
  cfg.out_dir = d1.string();
  auto rows = run_experiment(cfg);
  cfg.out_dir = d2.string();
  cfg.threads = 1;
  run_experiment(cfg);
  CHECK(slurp(d1 / "results.csv") == slurp(d2 / "results.csv"));

  std::set<std::string> metrics;
  for (auto& r : rows) metrics.insert(r.metric);
  CHECK(metrics.count("value"));
  CHECK(metrics.count("final_value"));
  CHECK(metrics.count("mean_final_value"));
  CHECK(metrics.count("std_final_value"));
  // 2 seeds x 2 instances x 2 algos x 2 checkpoints value rows.
  CHECK(std::count_if(rows.begin(), rows.end(), [](auto& r) { return r.metric == "value"; }) == 16);

  // Mean over instances recomputed from the final values.
  for (std::uint64_t base : {1u, 2u})
    for (std::string algo : {"distill", "qlearning"}) {
      double sum = 0.0, sq = 0.0, mean = -1.0, sd = -1.0;
      int n = 0;
      for (auto& r : rows) {
        if (r.algo != algo) continue;
        bool mine = r.seed == static_cast<std::int64_t>(instance_seed(base, 0)) ||
                    r.seed == static_cast<std::int64_t>(instance_seed(base, 1));
        if (r.metric == "final_value" && mine) {
          sum += r.value;
          sq += r.value * r.value;
          ++n;
        }
        if (r.seed == static_cast<std::int64_t>(base) && r.metric == "mean_final_value") mean = r.value;
        if (r.seed == static_cast<std::int64_t>(base) && r.metric == "std_final_value") sd = r.value;
      }
      REQUIRE(n == 2);
      CHECK(mean == doctest::Approx(sum / n));
      CHECK(sd == doctest::Approx(std::sqrt(std::max(0.0, sq / n - (sum / n) * (sum / n)))));
    }

  fs::path p1 = scratch("plot1"), p2 = scratch("plot2");
  auto files = emit_plots((d1 / "results.csv").string(), p1.string());
  emit_plots((d1 / "results.csv").string(), p2.string());
  REQUIRE(files.size() == 1u);
  CHECK(slurp(files[0]).find("<svg") != std::string::npos);
  CHECK(slurp(files[0]) == slurp(p2 / fs::path(files[0]).filename()));
}
