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

// privrl command line: gen | run | check | plot.
// Exit codes: 0 success, 2 validation failure, 3 oracle-inequality failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "privrl/core_models.hpp"
#include "privrl/harness.hpp"

namespace {

constexpr int kValidationFailure = 2;
constexpr int kInequalityFailure = 3;

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw privrl::ModelError("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw privrl::ModelError("cannot write " + path);
  f << text;
}

bool is_posg_kind(const std::string& k) {
  return k == "matching_pennies" || k == "posg_generic" || k == "posg_block";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privrl: tabular partially observable RL with privileged information"};
  app.require_subcommand(1);

  std::string kind = "generic", out;
  int S = 2, A = 2, O = 2, H = 3, n = 2;
  std::uint64_t seed = 0;
  std::string sharing = "full";
  bool zero_sum = false;
  auto* gen = app.add_subcommand("gen", "generate a random instance");
  gen->add_option("--kind", kind,
                  "generic | deterministic_transition | block_mdp | matching_pennies | "
                  "posg_generic | posg_block");
  gen->add_option("--S", S);
  gen->add_option("--A", A, "actions (per agent for POSGs)");
  gen->add_option("--O", O, "observations (per agent for POSGs)");
  gen->add_option("--H", H);
  gen->add_option("--n", n, "agents (POSG kinds)");
  gen->add_option("--sharing", sharing, "full | one_step_delay");
  gen->add_flag("--zero-sum", zero_sum);
  gen->add_option("--seed", seed);
  gen->add_option("--out", out)->required();

  std::string config, out_dir;
  auto* run = app.add_subcommand("run", "run an experiment configuration");
  run->add_option("--config", config)->required();
  run->add_option("--out", out_dir)->required();

  std::string which = "traj";
  int trials = 100;
  std::uint64_t check_seed = 0;
  auto* check = app.add_subcommand("check", "randomized inequality checks");
  check->add_option("--case", which, "traj | trick | mask")->required();
  check->add_option("--trials", trials);
  check->add_option("--seed", check_seed);

  std::string csv, plot_dir;
  auto* plot = app.add_subcommand("plot", "SVG learning curves from a results CSV");
  plot->add_option("--csv", csv)->required();
  plot->add_option("--out", plot_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kValidationFailure;
  }

  try {
    if (*gen) {
      if (is_posg_kind(kind)) {
        privrl::PosgSpec spec;
        spec.kind = kind == "matching_pennies" ? kind : (kind == "posg_block" ? "block" : "generic");
        spec.H = H;
        spec.S = S;
        spec.Ai.assign(n, A);
        spec.Oi.assign(n, O);
        if (sharing == "full") {
          spec.sharing = privrl::Sharing::kFull;
        } else if (sharing == "one_step_delay") {
          spec.sharing = privrl::Sharing::kOneStepDelay;
        } else {
          throw privrl::ModelError("unknown sharing: " + sharing);
        }
        spec.zero_sum = zero_sum;
        privrl::Posg g = privrl::gen_posg(spec, seed);
        if (!privrl::validate_model(g).empty()) throw privrl::ModelError("generated POSG is invalid");
        write_text(out, privrl::to_json(g));
      } else {
        privrl::Pomdp m = privrl::gen_pomdp(privrl::parse_instance_kind(kind), S, A, O, H, seed);
        if (!privrl::validate_model(m).empty()) throw privrl::ModelError("generated POMDP is invalid");
        write_text(out, privrl::to_json(m));
        auto prof = privrl::observability_profile(m);
        for (int h = 1; h <= H; ++h)
          std::cout << "gamma[" << h << "] = " << prof[h - 1].gamma
                    << (prof[h - 1].exact ? "" : " (upper bound)") << "\n";
      }
      std::cout << "wrote " << out << "\n";
      return 0;
    }
    if (*run) {
      privrl::ExperimentConfig cfg = privrl::ExperimentConfig::from_json(slurp(config));
      cfg.out_dir = out_dir;
      auto rows = privrl::run_experiment(cfg);
      std::cout << "wrote " << rows.size() << " rows to "
                << (std::filesystem::path(out_dir) / "results.csv").string() << "\n";
      return 0;
    }
    if (*check) {
      auto rep = privrl::check_inequalities(privrl::parse_inequality_case(which), trials, check_seed);
      std::cout << which << ": trials=" << rep.trials << " failures=" << rep.failures
                << " min_slack=" << rep.min_slack << "\n";
      return rep.pass() ? 0 : kInequalityFailure;
    }
    if (*plot) {
      for (auto& p : privrl::emit_plots(csv, plot_dir)) std::cout << "wrote " << p << "\n";
      return 0;
    }
  } catch (const privrl::ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
