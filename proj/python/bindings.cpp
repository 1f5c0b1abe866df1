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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "privrl/belief_engine.hpp"
#include "privrl/distillation.hpp"
#include "privrl/harness.hpp"
#include "privrl/marl.hpp"

namespace py = pybind11;
using namespace privrl;

PYBIND11_MODULE(_privrl, m) {
  m.doc() = "Tabular POMDP and POSG learning with privileged information";

  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<CapExceeded>(m, "CapExceeded", PyExc_RuntimeError);
  py::register_exception<ImpossibleObservation>(m, "ImpossibleObservation", PyExc_ValueError);

  py::class_<Pomdp>(m, "Pomdp")
      .def_readonly("H", &Pomdp::H)
      .def_readonly("S", &Pomdp::S)
      .def_readonly("A", &Pomdp::A)
      .def_readonly("O", &Pomdp::O)
      .def_readonly("mu1", &Pomdp::mu1)
      .def("reward", py::overload_cast<int, int, int>(&Pomdp::reward, py::const_))
      .def("to_json", [](const Pomdp& p) { return to_json(p); })
      .def_static("from_json", [](const std::string& text) {
        ModelDocument doc = parse_model_json(text);
        if (doc.kind != "pomdp") throw ModelError("document is not a pomdp");
        return doc.pomdp;
      })
      .def("validate", [](const Pomdp& p) {
        std::vector<std::string> out;
        for (auto& issue : validate_model(p)) out.push_back(issue.where);
        return out;
      });

  py::class_<FiniteMemoryPolicy>(m, "FiniteMemoryPolicy")
      .def(py::init<int, int, int, int>(), py::arg("H"), py::arg("A"), py::arg("O"), py::arg("L"))
      .def("encode",
           [](const FiniteMemoryPolicy& p, const std::vector<int>& obs,
              const std::vector<int>& acts) {
             return p.codec().encode(make_memory(p.L(), obs, acts));
           })
      .def("set_row", &FiniteMemoryPolicy::set_row)
      .def("dist", [](const FiniteMemoryPolicy& p, int h, std::uint64_t key) {
        Dist row(p.num_actions());
        p.dist(h, key, 0, row.data());
        return row;
      });

  m.def("gen_pomdp",
        [](const std::string& kind, int S, int A, int O, int H, std::uint64_t seed) {
          return gen_pomdp(parse_instance_kind(kind), S, A, O, H, seed);
        },
        py::arg("kind"), py::arg("S"), py::arg("A"), py::arg("O"), py::arg("H"),
        py::arg("seed") = 0);
  m.def("counterexample_pomdp", &counterexample_pomdp, py::arg("gamma"), py::arg("eps"));
  m.def("evaluate", [](const Pomdp& p, const FiniteMemoryPolicy& pi) {
    return evaluate_policy_exact(p, pi);
  });
  m.def("exact_belief",
        [](const Pomdp& p, const std::vector<int>& obs, const std::vector<int>& acts) {
          return exact_belief(p, obs, acts);
        });
  m.def("approx_belief",
        [](const Pomdp& p, const std::vector<int>& obs, const std::vector<int>& acts, int L) {
          return approx_belief(p, make_memory(L, obs, acts));
        });
  m.def("observability", [](const Pomdp& p) {
    std::vector<double> out;
    for (auto& e : observability_profile(p)) out.push_back(e.gamma);
    return out;
  });
  m.def("best_memory_value", [](const Pomdp& p, int L) {
    return best_deterministic_memory_policy(p, L).value;
  });
  m.def("check_inequalities",
        [](const std::string& which, int trials, std::uint64_t seed) {
          auto r = check_inequalities(parse_inequality_case(which), trials, seed);
          return py::make_tuple(r.pass(), r.min_slack, r.failures);
        },
        py::arg("which"), py::arg("trials"), py::arg("seed") = 0);
  m.def("run_experiment", [](const std::string& config_json) {
    std::vector<std::string> out;
    for (auto& r : run_experiment(ExperimentConfig::from_json(config_json)))
      out.push_back(r.to_csv());
    return out;
  });
  m.def("csv_header", [] { return std::string(kCsvHeader); });
  m.def("matching_pennies_ne_gap", [](int H, int K, std::uint64_t seed) {
    PosgSpec spec;
    spec.kind = "matching_pennies";
    spec.H = H;
    Posg g = gen_posg(spec, 0);
    OptimisticViConfig cfg;
    cfg.K = K;
    cfg.kind = Concept::kNE;
    Rng rng(seed);
    auto res = optimistic_vi(g, CommonBelief::exact(g, H), cfg, rng);
    return equilibrium_gap(g, res.policy, Concept::kNE).gap;
  });
}
