"""Stochastic dual dynamic programming on a StagedProblem.

Each iteration runs a forward pass (sample paths, simulate the current
policy, statistical upper bound) and a backward pass (one averaged Benders
cut per stage and trial path, then the first-stage solve as lower bound).
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

import scipy.sparse as sp

from .lp import HighsSession, LpOutcome, LpStatus, check_outcome, solve, verify_all_enabled
from .msslp import (StagedProblem, cut_scale, instantiate_subproblem, stage_cost, stage_rhs,
                     validate)

log = logging.getLogger(__name__)


class SddpError(RuntimeError):
    pass


class SubproblemInfeasible(SddpError):
    def __init__(self, stage, path, noise, status):
        super().__init__(
            f"stage {stage} subproblem (path {path}, noise {noise}) is {status.value}; "
            + ("relatively complete recourse is violated" if status is LpStatus.INFEASIBLE
               else "the cost-to-go floor is missing"))
        self.stage, self.path, self.noise = stage, path, noise


@dataclass(frozen=True, eq=False)
class Cut:
    """``theta_stage >= gradient . x + intercept`` on the previous stage's state."""

    stage: int
    gradient: np.ndarray
    intercept: float

    def __post_init__(self):
        g = np.asarray(self.gradient, dtype=float).ravel()
        if not (np.all(np.isfinite(g)) and math.isfinite(self.intercept)):
            raise ValueError("cut has non-finite entries")
        object.__setattr__(self, "gradient", g)

    def value(self, x) -> float:
        return float(self.gradient @ np.asarray(x, dtype=float) + self.intercept)


class CutPool:
    """Append-only cut lists, one per stage, shared by all realizations."""

    def __init__(self, problem: StagedProblem):
        self.problem = problem
        self._sessions = None
        self._dims = [0] + [problem.stages[t - 1].n_state for t in range(1, problem.n_stages)]
        self._cuts = [[] for _ in range(problem.n_stages)]
        self._cache = {}

    def add(self, cut: Cut) -> None:
        if cut.gradient.size != self._dims[cut.stage]:
            raise ValueError(f"cut for stage {cut.stage} has {cut.gradient.size} entries, "
                             f"expected {self._dims[cut.stage]}")
        self._cuts[cut.stage].append(cut)
        self._cache.pop(cut.stage, None)

    def cuts(self, t: int) -> tuple:
        if t >= len(self._cuts):
            return ()
        return tuple(self._cuts[t])

    def matrix(self, t: int):
        """Stacked (gradients, intercepts) of the cuts bounding stage ``t``."""
        if t >= len(self._cuts):
            return np.zeros((0, 0)), np.zeros(0)
        if t not in self._cache:
            cs = self._cuts[t]
            G = np.array([c.gradient for c in cs]).reshape(len(cs), self._dims[t])
            beta = np.array([c.intercept for c in cs], dtype=float)
            self._cache[t] = (G, beta)
        return self._cache[t]

    def approximation(self, t: int, x, floor: float = 0.0) -> float:
        G, beta = self.matrix(t)
        if not beta.size:
            return floor
        return max(floor, float(np.max(G @ np.asarray(x, dtype=float) + beta)))

    def __len__(self):
        return sum(len(c) for c in self._cuts)


GRAD_FLOOR = 1e-12


def compute_cut(trial_state, per_noise, stage: int = 0) -> Cut:
    """Average per-realization subgradients ``-B^T pi`` into one cut.

    ``per_noise`` is a list of ``(value, duals, B)`` with ``duals`` restricted
    to the stage rows that ``B`` multiplies.
    """
    if not per_noise:
        raise ValueError("per_noise must not be empty")
    x = np.asarray(trial_state, dtype=float).ravel()
    grads, vals = [], []
    for value, pi, B in per_noise:
        pi = np.asarray(pi, dtype=float).ravel()
        if B.shape != (pi.size, x.size):
            raise ValueError(f"B has shape {B.shape}, expected {(pi.size, x.size)}")
        grads.append(-(B.T @ pi))
        vals.append(float(value))
    g = np.mean(grads, axis=0)
    # round-off crumbs: HiGHS drops tiny entries, so both LP routes would differ
    g[np.abs(g) <= GRAD_FLOOR * max(1.0, np.abs(g).max(initial=0.0))] = 0.0
    return Cut(stage, g, float(np.mean(vals) - g @ x))


def relative_gap(lower: float, upper: float) -> float:
    """``(upper - lower) / |upper|`` clamped at zero."""
    gap = (upper - lower) / max(abs(upper), 1e-12)
    return max(gap, 0.0)


def upper_bound(mean: float, std: float, n_paths: int, z_alpha: float = 1.96) -> float:
    """One-sided confidence bound ``mean + z_alpha * std / sqrt(n_paths)``."""
    return mean + z_alpha * std / math.sqrt(n_paths)


# --------------------------------------------------------------------------


@dataclass
class TrainOptions:
    max_iterations: int = 1000
    forward_paths: int = 3
    epsilon: float = 1e-2
    z_alpha: float = 1.96
    seed: int = 0
    gap: str = "relative"  # or "absolute"
    lp_method: str = "simplex"
    dominance_filter: bool = False
    min_iterations: int = 1

    def __post_init__(self):
        if self.min_iterations < 1:
            raise ValueError("min_iterations must be >= 1")
        if self.forward_paths < 1:
            raise ValueError("forward_paths must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.z_alpha < 0:
            raise ValueError("z_alpha must be >= 0")
        if self.gap not in ("relative", "absolute"):
            raise ValueError("gap must be 'relative' or 'absolute'")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    lower: float
    upper_mean: float
    upper_sd: float
    upper: float
    rel_gap: float


@dataclass
class BoundHistory:
    records: list = field(default_factory=list)
    converged: bool = False

    CSV_HEADER = ("iteration", "lower", "upper_mean", "upper_sd", "upper", "rel_gap")

    def append(self, rec: IterationRecord):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def last(self) -> IterationRecord:
        return self.records[-1]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for r in self.records:
            w.writerow([r.iteration, repr(r.lower), repr(r.upper_mean), repr(r.upper_sd),
                        repr(r.upper), repr(r.rel_gap)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True, eq=False)
class TrainedPolicy:
    cuts: CutPool
    first_stage: np.ndarray
    lower_bound: float


@dataclass(frozen=True, eq=False)
class ForwardResult:
    states: list          # states[m][t]: outgoing state of stage t on path m
    objectives: np.ndarray
    mean: float
    std: float
    upper: float
    stage_costs: np.ndarray  # (M, n_stages)
    noise_indices: np.ndarray  # (M, n_stages)
    solutions: list = None   # solutions[m][t]: stage primal values when recorded


@dataclass(frozen=True, eq=False)
class EvaluationStats:
    mean: float
    std: float
    objectives: np.ndarray
    stage_cost_mean: np.ndarray
    solutions: list
    noise_indices: np.ndarray


def _pool_of(policy):
    return policy.cuts if isinstance(policy, TrainedPolicy) else policy


class _Sessions:
    """Persistent HiGHS models, one per stage, kept in step with a cut pool.

    Cut rows are stored as ``theta - g . x_state >= beta``; the outcome is
    laid out like the LP of ``instantiate_subproblem`` (stage variables,
    theta, then one surplus per cut).
    """

    def __init__(self, problem, pool):
        self.problem = problem
        self.pool = pool
        self.models = {}
        self.installed = {}

    def _model(self, t):
        if t not in self.models:
            p = self.problem
            st = p.stages[t]
            if t == p.last:
                self.models[t] = HighsSession(st.cost, st.A, st.rhs, st.lower, st.upper)
            else:
                A = sp.hstack([st.A, sp.csr_matrix((st.n_rows, 1))]).tocsr()
                self.models[t] = HighsSession(
                    np.append(st.cost, 1.0), A, st.rhs, np.append(st.lower, p.value_floor),
                    np.append(st.upper, np.inf))
            self.installed[t] = 0
        return self.models[t]

    def solve(self, t, state_in, n):
        p = self.problem
        st = p.stages[t]
        model = self._model(t)
        last = t == p.last
        if not last:
            cuts = self.pool.cuts(t + 1)
            new = cuts[self.installed[t]:]
            if new:
                k = len(new)
                G = np.array([c.gradient for c in new])
                scale = cut_scale(G)
                rows = np.repeat(np.arange(k), st.n_state)
                A = sp.csr_matrix(((-G / scale[:, None]).ravel(),
                                   (rows, np.tile(st.state_vars, k))),
                                  shape=(k, st.n_vars + 1)).tolil()
                A[:, st.n_vars] = (1.0 / scale).reshape(-1, 1)
                model.add_rows(A.tocsr(), np.array([c.intercept for c in new]) / scale)
                self.installed[t] = len(cuts)
        model.set_rhs(stage_rhs(p, t, state_in, n))
        c = stage_cost(p, t, n)
        model.set_cost(c if last else np.append(c, 1.0))
        out = model.solve()
        if not out.optimal or last:
            return out
        G, beta = self.pool.matrix(t + 1)
        theta = out.x[st.n_vars]
        surplus = np.maximum((theta - G @ out.x[st.state_vars] - beta) / cut_scale(G), 0.0)
        return LpOutcome(out.status, np.concatenate([out.x, surplus]), out.duals,
                         None, out.objective, out.iterations)


def _solve_stage(problem, t, state_in, n, pool, method, path=-1):
    if method == "highs":
        if pool._sessions is None:
            pool._sessions = _Sessions(problem, pool)
        out = pool._sessions.solve(t, state_in, n)
        if out.optimal and verify_all_enabled():
            check_outcome(instantiate_subproblem(problem, t, state_in, n, pool), out,
                          f"stage {t} ")
    else:
        out = solve(instantiate_subproblem(problem, t, state_in, n, pool), method)
    if not out.optimal:
        raise SubproblemInfeasible(t, path, n, out.status)
    return out


def sample_paths(problem: StagedProblem, n_paths: int, rng) -> np.ndarray:
    """Noise indices, uniform over each stage's SAA set; deterministic stages get 0."""
    idx = np.zeros((n_paths, problem.n_stages), dtype=int)
    for t, nz in enumerate(problem.noise):
        if nz.size > 1:
            idx[:, t] = rng.integers(0, nz.size, size=n_paths)
    return idx


def _simulate(problem, pool, noise_idx, method, record=False):
    M = noise_idx.shape[0]
    T = problem.n_stages
    memo = {}
    states = [[None] * T for _ in range(M)]
    costs = np.zeros((M, T))
    sols = [[None] * T for _ in range(M)] if record else None
    for m in range(M):
        s = problem.initial_state
        for t in range(T):
            n = int(noise_idx[m, t])
            key = (t, n, s.tobytes())
            if key not in memo:
                out = _solve_stage(problem, t, s, n, pool, method, m)
                st = problem.stages[t]
                x = out.x[:st.n_vars]
                memo[key] = (x, float(stage_cost(problem, t, n) @ x))
            x, cst = memo[key]
            costs[m, t] = cst
            s = x[problem.stages[t].state_vars]
            states[m][t] = s
            if record:
                sols[m][t] = x
    return states, costs, sols


def forward_pass(problem: StagedProblem, policy, n_paths: int, seed=None, *,
                 z_alpha: float = 1.96, lp_method: str = "simplex", rng=None,
                 record: bool = False) -> ForwardResult:
    """Simulate ``n_paths`` sampled scenarios under the cut policy.

    Upper bound = mean + z_alpha * sd / sqrt(M); sd is the sample standard
    deviation (0 when M == 1).
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    pool = _pool_of(policy)
    idx = sample_paths(problem, n_paths, rng)
    states, costs, sols = _simulate(problem, pool, idx, lp_method, record)
    obj = costs.sum(axis=1)
    mean = float(obj.mean())
    std = float(obj.std(ddof=1)) if n_paths > 1 else 0.0
    upper = upper_bound(mean, std, n_paths, z_alpha)
    return ForwardResult(states, obj, mean, std, upper, costs, idx, sols)


def backward_pass(problem: StagedProblem, policy, trial_states, *,
                  lp_method: str = "simplex", dominance_filter: bool = False,
                  visited=None):
    """Add one averaged cut per (stage, trial path), last stage first.

    ``trial_states[m][t]`` is the outgoing state of stage ``t`` on path ``m``.
    Returns ``(new_cuts, lower_bound)`` where ``new_cuts[t]`` lists the cuts
    appended for stage ``t``.
    """
    pool = _pool_of(policy)
    new_cuts = {}
    for t in range(problem.last, 0, -1):
        st = problem.stages[t]
        m_rows = st.n_rows
        nz = problem.noise[t]
        memo = {}
        stage_new = []
        for m, traj in enumerate(trial_states):
            x_bar = np.asarray(traj[t - 1], dtype=float)
            key = x_bar.tobytes()
            if key not in memo:
                per_noise = []
                for n in range(nz.size):
                    out = _solve_stage(problem, t, x_bar, n, pool, lp_method, m)
                    per_noise.append((out.objective, out.duals[:m_rows], st.B))
                memo[key] = compute_cut(x_bar, per_noise, stage=t)
            stage_new.append(memo[key])
        added = []
        for cut, traj in zip(stage_new, trial_states):
            if dominance_filter and visited is not None:
                visited.setdefault(t, []).append(np.asarray(traj[t - 1], dtype=float))
                if _dominated(pool, t, cut, visited[t]):
                    continue
            pool.add(cut)
            added.append(cut)
        new_cuts[t] = added
    first = _solve_stage(problem, 0, problem.initial_state, 0, pool, lp_method)
    return new_cuts, first.objective


def _dominated(pool, t, cut, points, tol=1e-9):
    G, beta = pool.matrix(t)
    if not beta.size:
        return False
    P = np.array(points)
    existing = (P @ G.T + beta).max(axis=1)
    mine = P @ cut.gradient + cut.intercept
    return bool(np.all(mine <= existing + tol * (1 + np.abs(existing))))


_observers = []


def add_observer(fn):
    """Call ``fn(problem, history)`` after every ``train`` run; returns ``fn``."""
    _observers.append(fn)
    return fn


def remove_observer(fn):
    _observers.remove(fn)


def train(problem: StagedProblem, options: TrainOptions = None, pool: CutPool = None):
    """Alternate forward and backward passes until the gap test passes.

    Returns ``(TrainedPolicy, BoundHistory)``.  Hitting the iteration cap is
    not an error; ``history.converged`` is False in that case.
    """
    options = options or TrainOptions()
    diags = validate(problem)
    if diags:
        raise ValueError("invalid staged problem: " + "; ".join(d.message for d in diags))
    pool = CutPool(problem) if pool is None else pool
    rng = np.random.default_rng(options.seed)
    history = BoundHistory()
    visited = {} if options.dominance_filter else None
    lower = -math.inf
    for it in range(1, options.max_iterations + 1):
        fwd = forward_pass(problem, pool, options.forward_paths, rng=rng,
                           z_alpha=options.z_alpha, lp_method=options.lp_method)
        _, lower = backward_pass(problem, pool, fwd.states, lp_method=options.lp_method,
                                 dominance_filter=options.dominance_filter, visited=visited)
        gap = relative_gap(lower, fwd.upper)
        history.append(IterationRecord(it, lower, fwd.mean, fwd.std, fwd.upper, gap))
        log.debug("iter %d lower %.6g upper %.6g gap %.3g cuts %d",
                  it, lower, fwd.upper, gap, len(pool))
        test = gap if options.gap == "relative" else fwd.upper - lower
        if test <= options.epsilon and it >= options.min_iterations:
            history.converged = True
            break
    first = _solve_stage(problem, 0, problem.initial_state, 0, pool, options.lp_method)
    x0 = first.x[:problem.stages[0].n_vars]
    for fn in list(_observers):
        fn(problem, history)
    return TrainedPolicy(pool, x0, first.objective), history


def evaluate(problem: StagedProblem, policy, n_paths: int, seed=None, *,
             lp_method: str = "simplex") -> EvaluationStats:
    """Out-of-sample simulation of a policy; no cuts are added."""
    rng = np.random.default_rng(seed)
    pool = _pool_of(policy)
    idx = sample_paths(problem, n_paths, rng)
    _, costs, sols = _simulate(problem, pool, idx, lp_method, record=True)
    obj = costs.sum(axis=1)
    std = float(obj.std(ddof=1)) if n_paths > 1 else 0.0
    return EvaluationStats(float(obj.mean()), std, obj, costs.mean(axis=0), sols, idx)
