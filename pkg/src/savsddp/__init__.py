"""Multistage stochastic LP toolkit for shared-autonomous-vehicle planning.

Modules:

* ``lp`` - equality-form LPs, a bounded revised simplex, a HiGHS backend.
* ``msslp`` - staged problems, subproblem instantiation, extensive form.
* ``sddp`` - cuts, forward/backward passes, training and evaluation.
* ``network``, ``demand``, ``scenarios`` - model inputs and SAA samples.
* ``sav`` - compiles a network and demand into a staged problem.
* ``experiments``, ``cli`` - sweeps that write CSV files.
"""
from .demand import Departure, DemandSpec
from .lp import LpOutcome, LpProblem, LpStatus, solve, verify_optimality
from .msslp import (NoiseSet, StagedProblem, StageTemplate, aggregate_stages, extensive_form,
                    instantiate_subproblem, solve_extensive_form, validate)
from .network import Link, NetworkSpec, Node, build_network
from .sav import (PerformanceReport, SavOptions, Weights, build_state_layout, compile_sav_problem,
                  extract_performance)
from .scenarios import make_demand_spec, sample_noise
from .sddp import (Cut, CutPool, TrainOptions, backward_pass, compute_cut, evaluate,
                   forward_pass, relative_gap, train)

__all__ = [
    "Cut", "CutPool", "Departure", "DemandSpec", "Link", "LpOutcome", "LpProblem", "LpStatus",
    "NetworkSpec", "Node", "NoiseSet", "PerformanceReport", "SavOptions", "StageTemplate",
    "StagedProblem", "TrainOptions", "Weights", "aggregate_stages", "backward_pass",
    "build_network", "build_state_layout", "compile_sav_problem", "compute_cut", "evaluate",
    "extensive_form", "extract_performance", "forward_pass", "instantiate_subproblem",
    "make_demand_spec", "relative_gap", "sample_noise", "solve", "solve_extensive_form", "train",
    "validate", "verify_optimality",
]
