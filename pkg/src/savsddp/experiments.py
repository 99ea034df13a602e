"""Experiment drivers behind the ``savsddp`` command.

Every driver trains one SDDP policy per sweep point, evaluates it on
simulated paths and writes one CSV.  All sweep points share the SAA sample
seed and the training/evaluation seeds derived from the master seed, so
differences between points are not blurred by sampling noise.
"""
from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np

from .msslp import ScenarioCapError, aggregate_stages, solve_extensive_form
from .sav import SavOptions, SavProblem, Weights, compile_sav_problem, extract_performance
from .sddp import BoundHistory, TrainOptions, evaluate, train
from .specfile import SpecError, _typed

log = logging.getLogger(__name__)

DEFAULT_RATES = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_WEIGHTS = ((10.0, 1.0, 1.0, 1.0), (1.0, 1.0, 1.0, 1.0), (1.0, 10.0, 1.0, 1.0))
ORACLE_TOL = 1e-3


@dataclass
class ExperimentConfig:
    network: object
    demand: object
    weights: Weights
    options: SavOptions
    iterations: int = 1000
    min_iterations: int = 1
    paths: int = 3
    epsilon: float = 1e-2
    samples: int = 20
    seed: int = 0
    out: str = "."
    eval_paths: int = 50
    lp_method: str = "highs"
    aggregate: bool = True
    booking_rates: tuple = DEFAULT_RATES
    weight_sets: tuple = DEFAULT_WEIGHTS
    rhos: tuple = (3.0, 4.0)
    dedicated: tuple = (False, True)
    max_scenarios: int = 10_000

    def __post_init__(self):
        for name in ("booking_rates", "weight_sets", "rhos", "dedicated"):
            if not len(getattr(self, name)):
                raise SpecError(f"experiment.{name}", "sweep list must not be empty")
        if self.iterations < 1 or self.paths < 1 or self.samples < 1 or self.eval_paths < 1:
            raise SpecError("experiment", "iterations, paths, samples and eval_paths must be >= 1")
        if not 1 <= self.min_iterations:
            raise SpecError("experiment.min_iterations", "must be >= 1")
        if not self.epsilon > 0:
            raise SpecError("experiment.epsilon", "must be > 0")


_EXPERIMENT_KEYS = {
    "iterations": "int", "min_iterations": "int", "paths": "int", "epsilon": "number", "samples": "int", "seed": "int",
    "eval_paths": "int", "lp_method": "str", "aggregate": "bool", "booking_rates": "list",
    "weight_sets": "list", "rhos": "list", "dedicated": "list", "max_scenarios": "int",
}


def config_from_model(model: dict, **overrides) -> ExperimentConfig:
    """Build a config from ``specfile.parse_model`` output.

    The optional top-level ``experiment`` object supplies sweep settings;
    keyword ``overrides`` (from the command line) win over it.  ``None``
    overrides are ignored.
    """
    exp = model.get("extra", {}).get("experiment", {})
    _typed(exp, "object", "experiment")
    kw = {}
    for key, value in exp.items():
        kind = _EXPERIMENT_KEYS.get(key)
        path = f"experiment.{key}"
        if kind is None:
            raise SpecError(path, "unknown key")
        if kind == "str":
            if not isinstance(value, str):
                raise SpecError(path, "expected a string")
        elif kind == "list":
            _typed(value, "list", path)
            value = tuple(_sweep_item(key, v, f"{path}[{i}]") for i, v in enumerate(value))
        else:
            value = _typed(value, kind, path)
        kw[key] = value
    opts = model["options"]
    kw.setdefault("seed", opts.seed)
    kw.setdefault("samples", opts.saa_samples)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    if kw.get("lp_method", "highs") not in ("highs", "simplex"):
        raise SpecError("experiment.lp_method", "must be 'highs' or 'simplex'")
    options = replace(opts, saa_samples=kw["samples"], seed=kw["seed"])
    return ExperimentConfig(model["network"], model["demand"], model["weights"], options, **kw)


def _sweep_item(key, v, path):
    if key == "weight_sets":
        _typed(v, "list", path)
        if len(v) != 4:
            raise SpecError(path, "expected [alpha_T, alpha_D, alpha_N, alpha_C]")
        return tuple(_typed(w, "number", f"{path}[{j}]") for j, w in enumerate(v))
    if key == "dedicated":
        return _typed(v, "bool", path)
    return _typed(v, "number", path)


def _train_options(cfg: ExperimentConfig) -> TrainOptions:
    return TrainOptions(max_iterations=cfg.iterations, forward_paths=cfg.paths,
                        epsilon=cfg.epsilon, seed=sub_seed(cfg.seed, 1), lp_method=cfg.lp_method,
                        min_iterations=min(cfg.min_iterations, cfg.iterations))


def sub_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=key).generate_state(1)[0])


# --------------------------------------------------------------------------
# one training run


@dataclass
class CaseResult:
    problem: SavProblem
    history: BoundHistory
    lower: float
    eval_mean: float
    eval_sd: float
    N_mean: float
    N_sd: float
    C: float
    E_T: float
    E_D: float
    time_pre: float
    time_od: float
    reports: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.history.converged


def run_case(cfg: ExperimentConfig, weights: Weights = None, options: SavOptions = None,
             demand=None) -> CaseResult:
    """Compile, train, evaluate and summarize one model variant."""
    weights = weights or cfg.weights
    options = options or cfg.options
    demand = demand or cfg.demand
    prob = compile_sav_problem(cfg.network, demand, weights, options)
    agg = aggregate_stages(prob.staged) if cfg.aggregate else None
    staged = agg.staged if agg else prob.staged
    topts = _train_options(cfg)
    policy, hist = train(staged, topts)
    ev = evaluate(staged, policy, cfg.eval_paths, seed=sub_seed(cfg.seed, 2),
                  lp_method=cfg.lp_method)
    reports = []
    for path in ev.solutions:
        stages = agg.expand(path) if agg else path
        reports.append(extract_performance(prob, stages))
    N = np.array([r.N for r in reports])
    mean = lambda name: float(np.mean([getattr(r, name) for r in reports]))  # noqa: E731
    return CaseResult(
        prob, hist, policy.lower_bound, ev.mean, ev.std, float(N.mean()),
        float(N.std(ddof=1)) if N.size > 1 else 0.0, reports[0].C, mean("T_total"),
        mean("D_total"), _per_traveler(reports, "pre"), _per_traveler(reports, "od"), reports)


def _per_traveler(reports, cls):
    """Pooled time per traveler of one class over all evaluated paths."""
    if cls == "pre":
        travelers = sum(r.travelers_prebooked for r in reports)
        time = sum(r.time_per_prebooked * r.travelers_prebooked for r in reports)
    else:
        travelers = sum(r.travelers_ondemand for r in reports)
        time = sum(r.time_per_ondemand * r.travelers_ondemand for r in reports)
    return time / travelers if travelers > 0 else 0.0


# --------------------------------------------------------------------------
# CSV output


def write_csv(path, header, rows) -> str:
    """Write atomically (temp file + rename); floats use ``repr``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return text


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# --------------------------------------------------------------------------
# subcommands

CONVERGENCE_HEADER = ["alpha_T", "alpha_D", "alpha_N", "alpha_C", "iteration", "lower",
                      "upper_mean", "upper_sd", "upper", "rel_gap", "converged"]
DESIGN_HEADER = ["booking_rate", "dedicated", "fleet_N_mean", "fleet_N_sd", "infra_C",
                 "converged"]
PARETO_HEADER = ["alpha_T", "alpha_D", "rho", "booking_rate", "dedicated", "E_T", "E_D", "E_obj",
                 "time_per_prebooked", "time_per_ondemand", "converged"]
BENCHMARK_HEADER = ["booking_rate", "obj_proposed", "obj_blind", "gap", "converged"]
ORACLE_HEADER = ["scenarios", "ef_optimum", "sddp_lower", "rel_gap", "iterations", "converged",
                 "passed"]


def _weights_from(base: Weights, ws) -> Weights:
    aT, aD, aN, aC = ws
    return Weights(aT, aD, aN, aC, base.alpha_P if base.alpha_P > max(ws) else None)


def run_validate(cfg: ExperimentConfig) -> str:
    rows = []
    for ws in cfg.weight_sets:
        res = run_case(cfg, weights=_weights_from(cfg.weights, ws))
        for r in res.history.records:
            rows.append([*map(float, ws), r.iteration, r.lower, r.upper_mean, r.upper_sd, r.upper,
                         r.rel_gap, res.converged])
        log.info("validate %s: %d iterations, lower %.6g", ws, len(res.history), res.lower)
    return write_csv(os.path.join(cfg.out, "convergence.csv"), CONVERGENCE_HEADER, rows)


def run_sensitivity(cfg: ExperimentConfig) -> str:
    rows = []
    for rate in cfg.booking_rates:
        for ded in cfg.dedicated:
            res = run_case(cfg, options=replace(cfg.options, dedicated=ded),
                           demand=cfg.demand.with_rate(rate))
            rows.append([float(rate), ded, res.N_mean, res.N_sd, res.C, res.converged])
            log.info("sensitivity rate %.2f dedicated %s: N %.4g C %.4g", rate, ded,
                     res.N_mean, res.C)
    return write_csv(os.path.join(cfg.out, "design.csv"), DESIGN_HEADER, rows)


def run_pareto(cfg: ExperimentConfig) -> str:
    rows = []
    for ws in cfg.weight_sets:
        for rho in cfg.rhos:
            for rate in cfg.booking_rates:
                for ded in cfg.dedicated:
                    res = run_case(cfg, weights=_weights_from(cfg.weights, ws),
                                   options=replace(cfg.options, rho=float(rho), dedicated=ded),
                                   demand=cfg.demand.with_rate(rate))
                    rows.append([float(ws[0]), float(ws[1]), float(rho), float(rate), ded,
                                 res.E_T, res.E_D, res.eval_mean, res.time_pre, res.time_od,
                                 res.converged])
    return write_csv(os.path.join(cfg.out, "pareto.csv"), PARETO_HEADER, rows)


def run_benchmark(cfg: ExperimentConfig) -> str:
    rows = []
    blind = run_case(cfg, options=replace(cfg.options, benchmark_blind=True, dedicated=False))
    for rate in cfg.booking_rates:
        res = run_case(cfg, demand=cfg.demand.with_rate(rate))
        rows.append([float(rate), res.eval_mean, blind.eval_mean, blind.eval_mean - res.eval_mean,
                     res.converged and blind.converged])
    return write_csv(os.path.join(cfg.out, "benchmark.csv"), BENCHMARK_HEADER, rows)


@dataclass(frozen=True)
class OracleReport:
    scenarios: int
    ef_optimum: float
    sddp_lower: float
    rel_gap: float
    iterations: int
    converged: bool

    @property
    def passed(self) -> bool:
        return self.rel_gap <= ORACLE_TOL


def run_oracle(cfg: ExperimentConfig, samples=None) -> OracleReport:
    """SDDP lower bound against the extensive-form optimum of the same SAA problem."""
    prob = compile_sav_problem(cfg.network, cfg.demand, cfg.weights, cfg.options, samples)
    staged = prob.staged
    count = staged.scenario_count()
    if count > cfg.max_scenarios:
        raise ScenarioCapError(count, cfg.max_scenarios)
    _, ef = solve_extensive_form(staged, cfg.max_scenarios, method=cfg.lp_method)
    if not ef.optimal:
        raise RuntimeError(f"extensive form is {ef.status.value}")
    if cfg.aggregate:
        staged = aggregate_stages(staged).staged
    topts = _train_options(cfg)
    policy, hist = train(staged, topts)
    gap = abs(ef.objective - policy.lower_bound) / max(abs(ef.objective), 1e-12)
    rep = OracleReport(count, ef.objective, policy.lower_bound, gap, len(hist), hist.converged)
    write_csv(os.path.join(cfg.out, "oracle.csv"), ORACLE_HEADER,
              [[rep.scenarios, rep.ef_optimum, rep.sddp_lower, rep.rel_gap, rep.iterations,
                rep.converged, rep.passed]])
    return rep


SUBCOMMANDS = {
    "validate": run_validate,
    "sensitivity": run_sensitivity,
    "pareto": run_pareto,
    "benchmark": run_benchmark,
    "oracle": run_oracle,
}


def max_threads() -> int:
    """Concurrency cap from ``SAVSDDP_THREADS`` (default 1).

    Sweep points and LP solves currently run sequentially, which satisfies
    any cap; the value is validated so a bad setting fails loudly.
    """
    raw = os.environ.get("SAVSDDP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise SpecError("SAVSDDP_THREADS", f"expected an integer, got {raw!r}") from None
    if n < 1:
        raise SpecError("SAVSDDP_THREADS", "must be >= 1")
    return n
