# Copyright 2026 The privrl Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import math

import pytest

import privrl


def test_generator_round_trip():
    m = privrl.gen_pomdp("block_mdp", 2, 2, 3, 3, seed=4)
    assert m.validate() == []
    back = privrl.Pomdp.from_json(m.to_json())
    assert back.to_json() == m.to_json()
    assert math.isclose(sum(m.mu1), 1.0)


def test_bad_inputs_raise():
    with pytest.raises(privrl.ModelError):
        privrl.gen_pomdp("block_mdp", 3, 2, 2, 3)
    with pytest.raises(privrl.ModelError):
        privrl.gen_pomdp("nonsense", 2, 2, 2, 2)
    with pytest.raises(ValueError):
        privrl.Pomdp.from_json("{")


def test_pitfall_gap():
    m = privrl.counterexample_pomdp(0.5, 0.5)
    # Distilled policy: uniform at the ambiguous observation, expert action
    # at the revealing one.
    distilled = privrl.FiniteMemoryPolicy(1, 2, 2, 1)
    distilled.set_row(1, distilled.encode([0], []), [0.5, 0.5])
    distilled.set_row(1, distilled.encode([1], []), [0.0, 1.0])
    gap = privrl.best_memory_value(m, 1) - privrl.evaluate(m, distilled)
    assert abs(gap - 1.0 / 12) < 1e-9


def test_full_memory_belief_is_exact():
    m = privrl.gen_pomdp("generic", 3, 2, 2, 3, seed=1)
    obs, acts = [0, 1, 1], [1, 0]
    exact = privrl.exact_belief(m, obs, acts)
    approx = privrl.approx_belief(m, obs, acts, 3)
    assert max(abs(a - b) for a, b in zip(exact, approx)) < 1e-9


def test_inequalities_and_observability():
    ok, slack, failures = privrl.check_inequalities("trick", 200, seed=3)
    assert ok and failures == 0 and slack >= -1e-10
    gammas = privrl.observability(privrl.gen_pomdp("block_mdp", 2, 2, 4, 2, seed=0))
    assert all(abs(g - 1.0) < 1e-9 for g in gammas)


def test_run_experiment_rows():
    cfg = {
        "instance_kind": "deterministic_transition",
        "S": 2, "A": 2, "O": 2, "H": 2,
        "instances": 2, "seeds": [1],
        "algos": ["distill", "qlearning"],
        "budget": 200, "threads": 1,
    }
    rows = privrl.run_experiment(json.dumps(cfg))
    assert privrl.csv_header().split(",")[0] == "algo"
    metrics = {r.split(",")[8] for r in rows}
    assert {"value", "final_value", "mean_final_value"} <= metrics


def test_matching_pennies():
    assert privrl.matching_pennies_ne_gap(1, 2000, 0) <= 0.05
