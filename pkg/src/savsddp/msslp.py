"""Staged stochastic linear programs.

Stage ``t`` solves::

    min  (c_t + dc_t^n) @ x_t + theta_{t+1}
    s.t. A_t x_t = b_t + db_t^n - B_t s_{t-1}
         lower_t <= x_t <= upper_t

where ``s_{t-1}`` is the vector of outgoing state slots of the previous stage
(``initial_state`` for the first stage) and ``(db_t^n, dc_t^n)`` is one of
``N_t`` equiprobable noise realizations.  Only right-hand sides and costs are
random; ``A_t`` and ``B_t`` are fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.sparse as sp

from .lp import LpProblem, solve

if TYPE_CHECKING:  # pragma: no cover
    from .sddp import CutPool


@dataclass(frozen=True, eq=False)
class StageTemplate:
    cost: np.ndarray
    A: sp.csr_matrix
    B: sp.csr_matrix
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    state_vars: np.ndarray
    var_names: tuple = None
    row_names: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "cost", np.asarray(self.cost, dtype=float).ravel())
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float).ravel())
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float).ravel())
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float).ravel())
        object.__setattr__(self, "A", sp.csr_matrix(self.A, dtype=float))
        object.__setattr__(self, "B", sp.csr_matrix(self.B, dtype=float))
        object.__setattr__(self, "state_vars", np.asarray(self.state_vars, dtype=int).ravel())

    @property
    def n_vars(self) -> int:
        return self.cost.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    @property
    def n_state(self) -> int:
        return self.state_vars.size

    @property
    def state_names(self):
        if self.var_names is None:
            return None
        return tuple(self.var_names[j] for j in self.state_vars)


@dataclass(frozen=True, eq=False)
class NoiseSet:
    """Equiprobable additive perturbations of a stage's rhs (and cost)."""

    rhs: np.ndarray
    cost: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "rhs", np.atleast_2d(np.asarray(self.rhs, dtype=float)))
        if self.cost is not None:
            object.__setattr__(self, "cost", np.atleast_2d(np.asarray(self.cost, dtype=float)))

    @classmethod
    def deterministic(cls, n_rows: int) -> "NoiseSet":
        return cls(np.zeros((1, n_rows)))

    @property
    def size(self) -> int:
        return self.rhs.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size) if self.size else np.zeros(0)


@dataclass(frozen=True, eq=False)
class StagedProblem:
    stages: tuple
    noise: tuple
    initial_state: np.ndarray = field(default_factory=lambda: np.zeros(0))
    value_floor: float = 0.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        noise = list(self.noise) if self.noise is not None else [None] * len(self.stages)
        noise = [NoiseSet.deterministic(s.n_rows) if nz is None else nz
                 for s, nz in zip(self.stages, noise)] + noise[len(self.stages):]
        object.__setattr__(self, "noise", tuple(noise))
        object.__setattr__(self, "initial_state",
                           np.asarray(self.initial_state, dtype=float).ravel())

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def last(self) -> int:
        return len(self.stages) - 1

    def scenario_count(self) -> int:
        return math.prod(nz.size for nz in self.noise)


@dataclass(frozen=True)
class Diagnostic:
    stage: int
    kind: str
    message: str


def validate(problem: StagedProblem) -> list:
    """Return a list of Diagnostic; empty iff the problem is well-formed."""
    out = []
    if problem.n_stages < 2:
        out.append(Diagnostic(-1, "stage-count", f"need at least 2 stages, got {problem.n_stages}"))
    if len(problem.noise) != problem.n_stages:
        out.append(Diagnostic(-1, "noise-count",
                              f"{len(problem.noise)} noise sets for {problem.n_stages} stages"))
    prev_state = problem.initial_state.size
    for t, st in enumerate(problem.stages):
        m, n = st.n_rows, st.n_vars
        if st.A.shape != (m, n):
            out.append(Diagnostic(t, "dimension-mismatch", f"A is {st.A.shape}, expected {(m, n)}"))
        if st.B.shape[0] != m or st.B.shape[1] != prev_state:
            out.append(Diagnostic(
                t, "dimension-mismatch",
                f"B is {st.B.shape}, expected ({m}, {prev_state}) to chain the previous state"))
        if st.lower.size != n or st.upper.size != n:
            out.append(Diagnostic(t, "dimension-mismatch", "bound vectors do not match variables"))
        elif np.any(st.lower > st.upper):
            out.append(Diagnostic(t, "bounds", "lower bound exceeds upper bound"))
        if st.state_vars.size and (st.state_vars.min() < 0 or st.state_vars.max() >= n):
            out.append(Diagnostic(t, "state-slots", "state slot refers to a missing variable"))
        if np.unique(st.state_vars).size != st.state_vars.size:
            out.append(Diagnostic(t, "state-slots", "duplicate state slot"))
        if t < len(problem.noise):
            nz = problem.noise[t]
            if nz.size == 0:
                out.append(Diagnostic(t, "empty-noise", "noise set has no realizations"))
            elif nz.rhs.shape[1] != m:
                out.append(Diagnostic(t, "dimension-mismatch",
                                      f"noise rhs width {nz.rhs.shape[1]} != {m} rows"))
            if nz.cost is not None and nz.cost.shape != (nz.size, n):
                out.append(Diagnostic(t, "dimension-mismatch", "noise cost shape mismatch"))
            if t == 0 and nz.size > 1:
                out.append(Diagnostic(t, "first-stage-noise", "first stage must be deterministic"))
        prev_state = st.n_state
    return out


# --------------------------------------------------------------------------
# subproblems

def stage_rhs(problem: StagedProblem, t: int, state_in, noise_index: int) -> np.ndarray:
    st = problem.stages[t]
    return st.rhs + problem.noise[t].rhs[noise_index] - st.B @ np.asarray(state_in, dtype=float)


def stage_cost(problem: StagedProblem, t: int, noise_index: int) -> np.ndarray:
    nz = problem.noise[t]
    c = problem.stages[t].cost
    return c if nz.cost is None else c + nz.cost[noise_index]


def cut_scale(G) -> np.ndarray:
    """Row scale of each cut: its largest coefficient, at least 1.

    Cut gradients can reach 1e5 or more when penalty costs are large.  Unscaled,
    a surplus can then move by 1e5 against a reduced cost below the optimality
    tolerance, and the solve stops at a visibly suboptimal vertex.
    """
    G = np.asarray(G, dtype=float)
    if not G.size:
        return np.ones(G.shape[0])
    return np.maximum(1.0, np.abs(G).max(axis=1))


def instantiate_subproblem(problem: StagedProblem, t: int, state_in, noise_index: int,
                           cuts: "CutPool" = None) -> LpProblem:
    """Stage ``t`` LP for one noise realization with cut rows for ``t+1``.

    Variables: the stage's own variables, then (non-final stages) the
    cost-to-go estimate, then one surplus variable per cut.  Rows: the stage
    rows (tag ``"stage"``) then one row per cut (tag ``"cut"``).
    """
    st = problem.stages[t]
    nz = problem.noise[t]
    if not 0 <= noise_index < nz.size:
        raise IndexError(f"noise index {noise_index} out of range for stage {t} ({nz.size})")
    state_in = np.asarray(state_in, dtype=float).ravel()
    if state_in.size != st.B.shape[1]:
        raise ValueError(f"stage {t} expects {st.B.shape[1]} state values, got {state_in.size}")
    b = stage_rhs(problem, t, state_in, noise_index)
    c = stage_cost(problem, t, noise_index)
    n, m = st.n_vars, st.n_rows
    row_ids = list(st.row_names) if st.row_names else [f"s{i}" for i in range(m)]
    names = list(st.var_names) if st.var_names else None

    if t == problem.last:
        return LpProblem(c, st.A, b, st.lower, st.upper, row_ids, ("stage",) * m, names)

    if cuts is not None:
        G, beta = cuts.matrix(t + 1)
    else:
        G, beta = np.zeros((0, st.n_state)), np.zeros(0)
    K = beta.size
    if G.shape[1] != st.n_state:
        raise ValueError(f"cut gradients have length {G.shape[1]}, stage {t} has {st.n_state} slots")
    # cut k, divided by s_k:  (theta - g_k . x_state) / s_k - surplus_k = beta_k / s_k
    scale = cut_scale(G)
    Gs = G / scale[:, None]
    Gfull = sp.csr_matrix((-Gs.ravel(), (np.repeat(np.arange(K), st.n_state),
                                         np.tile(st.state_vars, K))), shape=(K, n))
    top = sp.hstack([st.A, sp.csr_matrix((m, 1 + K))])
    bottom = sp.hstack([Gfull, sp.csr_matrix((1.0 / scale).reshape(-1, 1)), -sp.identity(K)])
    A = sp.vstack([top, bottom]).tocsr()
    cc = np.concatenate([c, [1.0], np.zeros(K)])
    lo = np.concatenate([st.lower, [problem.value_floor], np.zeros(K)])
    up = np.concatenate([st.upper, [np.inf], np.full(K, np.inf)])
    rhs = np.concatenate([b, beta / scale])
    row_ids += [f"cut{k}" for k in range(K)]
    tags = ("stage",) * m + ("cut",) * K
    if names is not None:
        names += ["theta"] + [f"surplus{k}" for k in range(K)]
    return LpProblem(cc, A, rhs, lo, up, row_ids, tags, names)


# --------------------------------------------------------------------------
# extensive form

class ScenarioCapError(ValueError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"extensive form needs {count} scenarios, cap is {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class TreeNode:
    stage: int
    parent: int
    realization: int
    probability: float
    offset: int


@dataclass(frozen=True, eq=False)
class ExtensiveForm:
    lp: LpProblem
    nodes: tuple
    problem: StagedProblem
    start: int

    def node_solution(self, x, node: int) -> np.ndarray:
        nd = self.nodes[node]
        return x[nd.offset:nd.offset + self.problem.stages[nd.stage].n_vars]

    def scenarios(self):
        """Leaf-to-root node chains, one per scenario, in tree order."""
        leaves = [i for i, nd in enumerate(self.nodes) if nd.stage == self.problem.last]
        out = []
        for leaf in leaves:
            chain = [leaf]
            while self.nodes[chain[-1]].parent >= 0:
                chain.append(self.nodes[chain[-1]].parent)
            out.append(chain[::-1])
        return out


def extensive_form(problem: StagedProblem, max_scenarios: int = 10_000, start: int = 0,
                   state_in=None, order=None) -> ExtensiveForm:
    """Deterministic equivalent over the whole scenario tree.

    Non-anticipativity is built in: each tree node owns one copy of its
    stage's variables, shared by every scenario passing through it.  With
    ``start > 0`` the tree is rooted at stage ``start`` with incoming state
    ``state_in`` and its optimum is the expected cost-to-go from there.
    ``order`` optionally permutes each stage's realizations (for tests).
    """
    count = math.prod(problem.noise[t].size for t in range(start, problem.n_stages))
    if count > max_scenarios:
        raise ScenarioCapError(count, max_scenarios)
    if state_in is None:
        state_in = problem.initial_state if start == 0 else None
    if state_in is None:
        raise ValueError("state_in is required when start > 0")
    state_in = np.asarray(state_in, dtype=float)

    nodes = []
    rows_i, cols_i, vals, rhs, cost, lo, up = [], [], [], [], [], [], []
    n_rows = 0
    offset = 0
    parents = [(-1, 1.0)]
    for t in range(start, problem.n_stages):
        st = problem.stages[t]
        nz = problem.noise[t]
        idx = range(nz.size) if order is None else order[t]
        Acoo = st.A.tocoo()
        Bcoo = st.B.tocoo()
        new_parents = []
        for parent, pprob in parents:
            for n in idx:
                prob = pprob / nz.size
                node_id = len(nodes)
                nodes.append(TreeNode(t, parent, int(n), prob, offset))
                rows_i.append(Acoo.row + n_rows)
                cols_i.append(Acoo.col + offset)
                vals.append(Acoo.data)
                b = st.rhs + nz.rhs[n]
                if parent < 0:
                    b = b - st.B @ state_in
                else:
                    pnode = nodes[parent]
                    pstage = problem.stages[pnode.stage]
                    rows_i.append(Bcoo.row + n_rows)
                    cols_i.append(pstage.state_vars[Bcoo.col] + pnode.offset)
                    vals.append(Bcoo.data)
                rhs.append(b)
                cost.append(prob * stage_cost(problem, t, n))
                lo.append(st.lower)
                up.append(st.upper)
                n_rows += st.n_rows
                offset += st.n_vars
                new_parents.append((node_id, prob))
        parents = new_parents

    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows_i), np.concatenate(cols_i))),
                      shape=(n_rows, offset))
    lp = LpProblem(np.concatenate(cost), A, np.concatenate(rhs), np.concatenate(lo),
                   np.concatenate(up))
    return ExtensiveForm(lp, tuple(nodes), problem, start)


def solve_extensive_form(problem: StagedProblem, max_scenarios: int = 10_000,
                         method: str = "simplex", **kw):
    ef = extensive_form(problem, max_scenarios, **kw)
    return ef, solve(ef.lp, method)


def cost_to_go(problem: StagedProblem, t: int, state, max_scenarios: int = 10_000,
               method: str = "simplex") -> float:
    """Exact expected cost-to-go of stage ``t`` given the incoming state."""
    _, out = solve_extensive_form(problem, max_scenarios, method, start=t, state_in=state)
    if not out.optimal:
        raise RuntimeError(f"cost-to-go LP at stage {t} is {out.status.value}")
    return out.objective


# --------------------------------------------------------------------------
# stage aggregation

@dataclass(frozen=True, eq=False)
class AggregatedProblem:
    """A coarser staging of ``original`` and the map back to it.

    ``blocks[b]`` lists the original stages merged into stage ``b`` of
    ``staged``; ``offsets[t]`` is where original stage ``t``'s variables
    start inside its block.
    """

    staged: StagedProblem
    original: StagedProblem
    blocks: tuple
    offsets: tuple

    def block_of(self, t: int) -> int:
        for b, members in enumerate(self.blocks):
            if t in members:
                return b
        raise IndexError(t)

    def expand(self, block_solutions) -> list:
        """Per-original-stage primal vectors from per-block vectors."""
        out = []
        for members, x in zip(self.blocks, block_solutions):
            for t in members:
                k = self.offsets[t]
                out.append(np.asarray(x)[k:k + self.original.stages[t].n_vars])
        return out


def default_boundaries(problem: StagedProblem) -> tuple:
    """Stage 0 plus every stage with more than one realization.

    A fully deterministic problem is split before its last stage instead, so
    the first block carries nearly the whole chained LP and the cuts only
    have to describe the short tail.
    """
    cuts = {0} | {t for t, nz in enumerate(problem.noise) if nz.size > 1}
    if len(cuts) < 2 and problem.n_stages > 1:
        cuts.add(problem.last)
    return tuple(sorted(cuts))


def aggregate_stages(problem: StagedProblem, boundaries=None) -> AggregatedProblem:
    """Merge each stage into its predecessor unless it starts a new block.

    Merging is exact when the merged stages reveal no new information: the
    block LP is the chained LP of its members, so the cost-to-go at every
    block boundary is unchanged.  Noise sets of a block are combined as a
    Cartesian product (in lexicographic order).  Only the first member of a
    block may be random; merging a random stage into its predecessor would
    let earlier decisions see its noise, so such boundaries are rejected.
    """
    bounds = default_boundaries(problem) if boundaries is None else tuple(sorted(set(boundaries)))
    if not bounds or bounds[0] != 0:
        raise ValueError("stage 0 must start a block")
    if bounds[-1] > problem.last:
        raise ValueError(f"boundary {bounds[-1]} beyond the last stage {problem.last}")
    hidden = [t for t, nz in enumerate(problem.noise) if nz.size > 1 and t not in bounds]
    if hidden:
        raise ValueError(f"stage {hidden[0]} is random and must start a block")
    ends = list(bounds[1:]) + [problem.n_stages]
    blocks = tuple(tuple(range(a, e)) for a, e in zip(bounds, ends))
    offsets = [0] * problem.n_stages
    stages, noises = [], []
    for members in blocks:
        off = 0
        for t in members:
            offsets[t] = off
            off += problem.stages[t].n_vars
        stages.append(_merge_block(problem, members, offsets))
        noises.append(_merge_noise(problem, members))
    staged = StagedProblem(stages, noises, problem.initial_state, problem.value_floor,
                           problem.name)
    return AggregatedProblem(staged, problem, blocks, tuple(offsets))


def _merge_block(problem, members, offsets):
    first = problem.stages[members[0]]
    if len(members) == 1:
        return first
    n = sum(problem.stages[t].n_vars for t in members)
    rhs, names, rnames = [], [], []
    row0 = 0
    ri, ci, vals = [], [], []
    for t in members:
        st = problem.stages[t]
        A = st.A.tocoo()
        ri.append(A.row + row0)
        ci.append(A.col + offsets[t])
        vals.append(A.data)
        if t != members[0]:
            prev = problem.stages[t - 1]
            B = st.B.tocoo()
            ri.append(B.row + row0)
            ci.append(prev.state_vars[B.col] + offsets[t - 1])
            vals.append(B.data)
        rhs.append(st.rhs)
        names += [(t, nm) for nm in (st.var_names or range(st.n_vars))]
        rnames += [(t, nm) for nm in (st.row_names or range(st.n_rows))]
        row0 += st.n_rows
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(ri), np.concatenate(ci))),
                      shape=(row0, n))
    B = sp.vstack([first.B] + [sp.csr_matrix((problem.stages[t].n_rows, first.B.shape[1]))
                               for t in members[1:]]).tocsr()
    last = problem.stages[members[-1]]
    return StageTemplate(
        np.concatenate([problem.stages[t].cost for t in members]), A, B, np.concatenate(rhs),
        np.concatenate([problem.stages[t].lower for t in members]),
        np.concatenate([problem.stages[t].upper for t in members]),
        last.state_vars + offsets[members[-1]], tuple(names), tuple(rnames))


def _merge_noise(problem, members):
    sets = [problem.noise[t] for t in members]
    if len(sets) == 1:
        return sets[0]
    grids = np.meshgrid(*[np.arange(s.size) for s in sets], indexing="ij")
    combo = np.stack([g.ravel() for g in grids], axis=1)
    rhs = np.hstack([s.rhs[combo[:, j]] for j, s in enumerate(sets)])
    cost = None
    if any(s.cost is not None for s in sets):
        cost = np.hstack([
            (s.cost[combo[:, j]] if s.cost is not None
             else np.zeros((combo.shape[0], problem.stages[t].n_vars)))
            for j, (s, t) in enumerate(zip(sets, members))])
    return NoiseSet(rhs, cost)
