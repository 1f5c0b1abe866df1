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

"""Python bindings for privrl."""

from ._privrl import (
    CapExceeded,
    FiniteMemoryPolicy,
    ImpossibleObservation,
    ModelError,
    Pomdp,
    approx_belief,
    best_memory_value,
    check_inequalities,
    counterexample_pomdp,
    csv_header,
    evaluate,
    exact_belief,
    gen_pomdp,
    matching_pennies_ne_gap,
    observability,
    run_experiment,
)

__all__ = [
    "CapExceeded",
    "FiniteMemoryPolicy",
    "ImpossibleObservation",
    "ModelError",
    "Pomdp",
    "approx_belief",
    "best_memory_value",
    "check_inequalities",
    "counterexample_pomdp",
    "csv_header",
    "evaluate",
    "exact_belief",
    "gen_pomdp",
    "matching_pennies_ne_gap",
    "observability",
    "run_experiment",
]
