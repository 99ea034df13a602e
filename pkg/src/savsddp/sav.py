"""Compile a shared-autonomous-vehicle design/operations problem into stages.

Stage 0 chooses link and storage capacities, stage 1 deploys the fleet after
the pre-booked table is revealed, and stages 2..T route vehicles and
travelers on the time-expanded network while on-demand requests arrive at
their departure steps.  Hard arrival and no-early-exit requirements are
replaced by penalty terms so every stage problem stays feasible.

Variable keys (tuples, first entry is the kind):

    ("mu", a)                     capacity of arc a
    ("deploy", cls, i)            vehicles of class cls entering at node i
    ("N",)                        fleet size
    ("mem", r, s, k)              remembered pre-booked demand of cell (r, s, k)
    ("tot", tcls, k, s)           realized demand total for (k, s)
    ("x", cls, a, t)              vehicles of class cls starting arc a at t
    ("xexit", cls, i, t)          vehicles leaving the network at node i
    ("y", tcls, k, s, a, t)       travelers of class tcls starting arc a at t
    ("Y", k, s, a, t)             pre-booked travelers riding dedicated vehicles
    ("yexit", tcls, k, s, t)      travelers arriving at their destination s
    ("ystrand", tcls, k, s, i)    travelers still en route when the horizon ends
    ("Q", tcls, k, s, t)          cumulative arrivals
    ("P", k, s, t)                arrival shortfall after the latest arrival time
    ("slack", ...)                inequality slacks
Vehicle classes are "nd" (non-dedicated) and "ded"; traveler classes are
"pre" and "od".  A quantity needed at a later stage is carried by copy
variables with the same key.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .demand import DemandSpec
from .msslp import AggregatedProblem, NoiseSet, StagedProblem, StageTemplate, aggregate_stages
from .network import NetworkSpec
from .scenarios import DemandSample, sample_all

KIND_ORDER = {k: i for i, k in enumerate(
    ["mu", "deploy", "x", "y", "Q", "mem", "tot", "N", "xexit", "yexit", "ystrand",
     "Y", "P", "slack"])}


@dataclass(frozen=True)
class Weights:
    alpha_T: float = 1.0
    alpha_D: float = 1.0
    alpha_N: float = 1.0
    alpha_C: float = 1.0
    alpha_P: float = None

    def __post_init__(self):
        base = (self.alpha_T, self.alpha_D, self.alpha_N, self.alpha_C)
        if min(base) < 0:
            raise ValueError("weights must be >= 0")
        if self.alpha_P is None:
            object.__setattr__(self, "alpha_P", 1000.0 * max(max(base), 1e-12))
        if not self.alpha_P > max(base):
            raise ValueError("alpha_P must exceed every performance weight")

    def scaled(self, factor: float) -> "Weights":
        return Weights(self.alpha_T * factor, self.alpha_D * factor, self.alpha_N * factor,
                       self.alpha_C * factor, self.alpha_P * factor)


@dataclass(frozen=True)
class SavOptions:
    rho: float = 3.0
    dedicated: bool = False
    benchmark_blind: bool = False
    saa_samples: int = 20
    seed: int = 0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be > 0")
        if self.saa_samples < 1:
            raise ValueError("saa_samples must be >= 1")


@dataclass(frozen=True)
class StateLayout:
    """Outgoing state slots of every stage, in column order."""

    slots: tuple  # slots[t] = tuple of keys

    def count(self, t: int) -> int:
        return len(self.slots[t])

    def kinds(self, t: int) -> dict:
        out = defaultdict(int)
        for key in self.slots[t]:
            out[key[0]] += 1
        return dict(out)

    def index(self, t: int) -> dict:
        return {k: i for i, k in enumerate(self.slots[t])}


def _key_order(key):
    return (KIND_ORDER[key[0]],) + tuple(key[1:])


class _Stage:
    def __init__(self, t):
        self.t = t
        self.keys = []
        self.index = {}
        self.lb, self.ub, self.cost = [], [], []
        self.rows = []          # (name, own {key: v}, state {key: v}, rhs, noise {cell: v})
        self.produces = set()   # keys that later stages may read

    def var(self, key, lb=0.0, ub=math.inf, cost=0.0, state=False):
        if key in self.index:
            raise KeyError(f"duplicate variable {key} at stage {self.t}")
        self.index[key] = len(self.keys)
        self.keys.append(key)
        self.lb.append(lb)
        self.ub.append(ub)
        self.cost.append(cost)
        if state:
            self.produces.add(key)
        return key

    def row(self, name, own, state=None, rhs=0.0, noise=None):
        self.rows.append((name, dict(own), dict(state or {}), rhs, dict(noise or {})))

    def needs(self):
        out = set()
        for _, _, st, _, _ in self.rows:
            out.update(st)
        return out


@dataclass(frozen=True, eq=False)
class SavProblem:
    staged: StagedProblem
    network: NetworkSpec
    demand: DemandSpec
    weights: Weights
    options: SavOptions
    layout: StateLayout
    var_keys: tuple      # var_keys[t] = tuple of keys in column order
    samples: dict        # stage -> DemandSample actually compiled
    groups: tuple        # traveler groups (tcls, k, s) with s a node position

    def var_index(self, t: int) -> dict:
        return {k: i for i, k in enumerate(self.var_keys[t])}

    def aggregated(self) -> AggregatedProblem:
        """Staging with one stage per information event (stage 0 and every
        stage whose demand sample has several realizations)."""
        return aggregate_stages(self.staged)


# --------------------------------------------------------------------------


def _effective(demand: DemandSpec, options: SavOptions):
    if options.benchmark_blind:
        return demand.with_rate(0.0), False
    return demand, options.dedicated


def _build_symbolic(network: NetworkSpec, demand: DemandSpec, weights: Weights,
                    options: SavOptions):
    demand, dedicated = _effective(demand, options)
    T = demand.horizon
    arcs = network.arcs()
    nidx = network.node_index
    V = len(network.nodes)
    rate = demand.booking_rate
    aT, aD, aN, aC, aP = (weights.alpha_T, weights.alpha_D, weights.alpha_N, weights.alpha_C,
                          weights.alpha_P)
    vcls = ["nd", "ded"] if dedicated else ["nd"]

    cells = [(nidx[r], nidx[s], k, u) for r, s, k, u in demand.cells()]
    for r, s, k, u in cells:
        if k > T:
            raise ValueError("departure after the horizon")
    # traveler groups and the cells feeding them
    expected = defaultdict(float)
    for r, s, k, u in cells:
        expected[("pre", k, s)] += rate * u
        expected[("od", k, s)] += (1.0 - rate) * u
    groups = sorted(g for g, u in expected.items() if u > 0)
    pre_cells = [(r, s, k) for r, s, k, u in cells if rate * u > 0]
    dedicated_groups = [g for g in groups if g[0] == "pre"] if dedicated else []
    ks = sorted({d.k for d in demand.departures})
    Tk = {d.k: d.latest_arrival for d in demand.departures}
    all_cells = [(r, s, k) for r, s, k, _ in cells]

    stages = [_Stage(t) for t in range(T + 1)]

    # stage 0: capacities
    s0 = stages[0]
    for arc in arcs:
        s0.var(("mu", arc.index), arc.cap_min, arc.cap_max, aC * arc.cost, state=True)

    # stage 1: fleet deployment, pre-booked table
    s1 = stages[1]
    for c in vcls:
        for i in range(V):
            s1.var(("deploy", c, i), state=True)
    s1.var(("N",), cost=aN)
    s1.row("fleet", {("N",): 1.0, **{("deploy", c, i): -1.0 for c in vcls for i in range(V)}})
    for r, s, k in pre_cells:
        key = s1.var(("mem", r, s, k), state=True)
        s1.row(("mem", r, s, k), {key: 1.0}, noise={("pre", r, s, k): 1.0})
    for g in groups:
        if g[0] == "pre":
            _, k, s = g
            key = s1.var(("tot", "pre", k, s), state=True)
            s1.row(key, {key: 1.0},
                   noise={("pre", r, s2, k2): 1.0 for r, s2, k2 in pre_cells
                          if s2 == s and k2 == k})

    # operation stages
    for t in range(2, T + 1):
        st = stages[t]
        live = [a for a in arcs if t + a.travel_time <= T]
        moving = [a for a in live if not a.waiting]
        active = [g for g in groups if g[1] <= t]
        for c in vcls:
            for a in live:
                st.var(("x", c, a.index, t), cost=0.0 if a.waiting else aD * a.length, state=True)
            for i in range(V):
                st.var(("xexit", c, i, t), cost=aP if t < T else 0.0)
        # vehicle conservation
        for c in vcls:
            for i in range(V):
                own = {("x", c, a.index, t): 1.0 for a in live if a.origin == i}
                own[("xexit", c, i, t)] = 1.0
                state = {("x", c, a.index, t - a.travel_time): -1.0 for a in arcs
                         if a.dest == i and t - a.travel_time >= 2}
                if t == 2:
                    state[("deploy", c, i)] = -1.0
                st.row(("vcons", c, i, t), own, state)
        # road and storage capacity
        for a in live:
            sk = st.var(("slack", "cap", a.index, t))
            own = {("x", c, a.index, t): 1.0 for c in vcls}
            own[sk] = 1.0
            st.row(("cap", a.index, t), own, {("mu", a.index): -1.0})

        # travelers
        for g in active:
            tc, k, s = g
            for a in live:
                st.var(("y", tc, k, s, a.index, t), cost=aT * a.travel_time, state=True)
            st.var(("yexit", tc, k, s, t))
            if t == T:
                for i in range(V):
                    if i != s:
                        st.var(("ystrand", tc, k, s, i))
            for i in range(V):
                own = {("y", tc, k, s, a.index, t): 1.0 for a in live if a.origin == i}
                if i == s:
                    own[("yexit", tc, k, s, t)] = 1.0
                elif t == T:
                    own[("ystrand", tc, k, s, i)] = 1.0
                state = {("y", tc, k, s, a.index, t - a.travel_time): -1.0 for a in arcs
                         if a.dest == i and t - a.travel_time >= k}
                noise = {}
                if t == k:
                    if tc == "pre" and (i, s, k) in pre_cells:
                        state[("mem", i, s, k)] = -1.0
                    elif tc == "od" and (i, s, k) in all_cells:
                        noise[("od", i, s, k)] = 1.0
                st.row(("tcons", tc, k, s, i, t), own, state, noise=noise)
            q = st.var(("Q", tc, k, s, t), state=True)
            state = {("Q", tc, k, s, t - 1): -1.0} if t > k else {}
            st.row(("qtrans", tc, k, s, t), {q: 1.0, ("yexit", tc, k, s, t): -1.0}, state)
        # on-demand totals revealed at their departure step
        for g in groups:
            if g[0] == "od" and g[1] == t:
                _, k, s = g
                key = st.var(("tot", "od", k, s), state=True)
                st.row(key, {key: 1.0}, noise={("od", r, s2, k2): 1.0 for r, s2, k2 in all_cells
                                                if s2 == s and k2 == k})
        # arrival shortfall
        for k in ks:
            if t < Tk[k]:
                continue
            for s in sorted({g[2] for g in groups if g[1] == k}):
                p = st.var(("P", k, s, t), cost=aP)
                own = {p: 1.0}
                state = {}
                for tc in ("pre", "od"):
                    if (tc, k, s) in groups:
                        own[("Q", tc, k, s, t)] = 1.0
                        state[("tot", tc, k, s)] = -1.0
                st.row(("short", k, s, t), own, state)
        # dedicated boarding and carrying capacity on movement arcs
        for a in moving:
            for g in dedicated_groups:
                _, k, s = g
                if k > t:
                    continue
                yk = st.var(("Y", k, s, a.index, t))
                sk = st.var(("slack", "Y", k, s, a.index, t))
                st.row(("board", k, s, a.index, t),
                       {yk: 1.0, sk: 1.0, ("y", "pre", k, s, a.index, t): -1.0})
            if dedicated:
                own = {("Y", k, s, a.index, t): 1.0 for _, k, s in dedicated_groups if k <= t}
                sk = st.var(("slack", "carry", "ded", a.index, t))
                own[sk] = 1.0
                own[("x", "ded", a.index, t)] = -options.rho
                st.row(("carry", "ded", a.index, t), own)
            own = {}
            for tc, k, s in active:
                own[("y", tc, k, s, a.index, t)] = 1.0
                if dedicated and tc == "pre":
                    own[("Y", k, s, a.index, t)] = -1.0
            sk = st.var(("slack", "carry", "nd", a.index, t))
            own[sk] = 1.0
            own[("x", "nd", a.index, t)] = -options.rho
            st.row(("carry", "nd", a.index, t), own)

    _add_carries(stages)
    layout = StateLayout(tuple(tuple(sorted(st.produces, key=_key_order)) for st in stages))
    return stages, layout, groups, demand


def _add_carries(stages):
    """Copy variables for quantities read more than one stage after creation."""
    born = {}
    for st in stages:
        for key in st.produces:
            born.setdefault(key, st.t)
    last_need = {}
    for st in stages:
        # sorted: set order varies with the hash seed, and it fixes column order
        for key in sorted(st.needs(), key=_key_order):
            if key not in born:
                raise KeyError(f"stage {st.t} reads {key}, which no stage produces")
            last_need[key] = max(last_need.get(key, -1), st.t)
    # a produced key that nobody reads is not state
    for st in stages:
        st.produces = {k for k in st.produces if k in last_need and last_need[k] > st.t}
    for key, L in last_need.items():
        for t in range(born[key] + 1, L):
            st = stages[t]
            st.var(key, state=True)
            st.row(("copy",) + key, {key: 1.0}, {key: -1.0})


def _assemble(stages, layout, samples):
    templates, noises, var_keys = [], [], []
    prev_index = {}
    for st in stages:
        n = len(st.keys)
        m = len(st.rows)
        ri, ci, vals = [], [], []
        bi, bj, bv = [], [], []
        rhs = np.zeros(m)
        noise_cols = defaultdict(dict)  # cell -> {row: coef}
        for r, (_, own, state, b, noise) in enumerate(st.rows):
            for key, v in own.items():
                ri.append(r)
                ci.append(st.index[key])
                vals.append(v)
            for key, v in state.items():
                bi.append(r)
                bj.append(prev_index[key])
                bv.append(v)
            rhs[r] = b
            for cell, v in noise.items():
                noise_cols[cell][r] = v
        A = sp.csr_matrix((vals, (ri, ci)), shape=(m, n))
        B = sp.csr_matrix((bv, (bi, bj)), shape=(m, len(prev_index)))
        out_keys = layout.slots[st.t]
        state_vars = [st.index[k] for k in out_keys]
        templates.append(StageTemplate(st.cost, A, B, rhs, st.lb, st.ub, state_vars,
                                       tuple(st.keys), tuple(r[0] for r in st.rows)))
        var_keys.append(tuple(st.keys))
        noises.append(_noise_for_stage(st.t, m, noise_cols, samples))
        prev_index = {k: i for i, k in enumerate(out_keys)}
    return templates, noises, var_keys


def _noise_for_stage(t, m, noise_cols, samples):
    if not noise_cols:
        return NoiseSet.deterministic(m)
    smp = samples.get(t)
    if smp is None:
        raise ValueError(f"stage {t} needs demand samples but none were supplied")
    tag = "pre" if smp.kind == "prebooked" else "od"
    cells = {(tag,) + tuple(c): j for j, c in enumerate(smp.cells)}
    rhs = np.zeros((smp.size, m))
    for cell, rows in noise_cols.items():
        if cell not in cells:
            raise ValueError(f"stage {t} samples lack cell {cell}")
        q = smp.quantities[:, cells[cell]]
        for r, v in rows.items():
            rhs[:, r] += v * q
    return NoiseSet(rhs)


def _positional_samples(network, samples):
    nidx = network.node_index
    out = {}
    for t, smp in samples.items():
        cells = tuple((nidx[r], nidx[s], k) for r, s, k in smp.cells)
        out[t] = DemandSample(smp.stage, smp.kind, cells, smp.quantities).unique()
    return out


def build_state_layout(network: NetworkSpec, demand: DemandSpec,
                       options: SavOptions = None) -> StateLayout:
    _, layout, _, _ = _build_symbolic(network, demand, Weights(), options or SavOptions())
    return layout


def compile_sav_problem(network: NetworkSpec, demand: DemandSpec, weights: Weights = None,
                        options: SavOptions = None, samples: dict = None) -> SavProblem:
    """Staged LP for SDDP.

    ``samples`` maps stage -> DemandSample (cells by node id); by default
    ``options.saa_samples`` realizations are drawn for stage 1 and every
    departure stage.  Realization sets that are all identical collapse to a
    single realization.
    """
    weights = weights or Weights()
    options = options or SavOptions()
    stages, layout, groups, eff = _build_symbolic(network, demand, weights, options)
    if samples is None:
        samples = sample_all(eff, options.saa_samples, options.seed)
    pos = _positional_samples(network, samples)
    templates, noises, var_keys = _assemble(stages, layout, pos)
    staged = StagedProblem(templates, noises, np.zeros(0), 0.0, "sav")
    return SavProblem(staged, network, eff, weights, options, layout, tuple(var_keys), pos,
                      tuple(groups))


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PerformanceReport:
    T_total: float
    T_riding: float
    T_waiting: float
    D_total: float
    N: float
    C: float
    penalty_shortfall: float
    penalty_early_exit: float
    travelers_prebooked: float
    travelers_ondemand: float
    time_per_prebooked: float
    time_per_ondemand: float
    objective: float


def extract_performance(problem: SavProblem, solved_path) -> PerformanceReport:
    """Performance indices of one simulated path (per-stage primal vectors)."""
    T = problem.demand.horizon
    if len(solved_path) != T + 1 or any(x is None for x in solved_path):
        raise ValueError(f"solved path must hold {T + 1} stage solutions")
    arcs = problem.network.arcs()
    w = problem.weights
    riding = waiting = dist = 0.0
    time_cls = defaultdict(float)
    short = early = 0.0
    travelers = defaultdict(float)
    N = C = 0.0
    for t, x in enumerate(solved_path):
        for j, key in enumerate(problem.var_keys[t]):
            v = float(x[j])
            kind = key[0]
            if kind == "mu" and t == 0:
                C += arcs[key[1]].cost * v
            elif kind == "N":
                N = v
            elif kind == "y" and len(key) == 6 and key[5] == t:
                a = arcs[key[4]]
                tt = a.travel_time * v
                time_cls[key[1]] += tt
                if a.waiting:
                    waiting += tt
                else:
                    riding += tt
            elif kind == "x" and key[3] == t:
                a = arcs[key[2]]
                if not a.waiting:
                    dist += a.length * v
            elif kind == "P":
                short += w.alpha_P * v
            elif kind == "xexit" and key[3] < T:
                early += w.alpha_P * v
            elif kind == "tot" and ((key[1] == "pre" and t == 1) or
                                    (key[1] == "od" and t == key[2])):
                travelers[key[1]] += v
    total_time = riding + waiting
    obj = (w.alpha_T * total_time + w.alpha_D * dist + w.alpha_N * N + w.alpha_C * C
           + short + early)

    def per(cls):
        return time_cls[cls] / travelers[cls] if travelers[cls] > 0 else 0.0

    return PerformanceReport(total_time, riding, waiting, dist, N, C, short, early,
                             travelers["pre"], travelers["od"], per("pre"), per("od"), obj)
