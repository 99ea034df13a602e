"""Road network specification and its time-expanded graph."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Link:
    origin: object
    dest: object
    travel_time: int = 1
    length: float = 1.0
    cost: float = 1.0
    cap_min: float = 0.0
    cap_max: float = float("inf")


@dataclass(frozen=True)
class Node:
    id: object
    storage_cost: float = 1.0
    cap_min: float = 0.0
    cap_max: float = float("inf")


@dataclass(frozen=True)
class Arc:
    """A link or a node's waiting arc, as used by the stage models."""

    index: int
    origin: int      # node position, not node id
    dest: int
    travel_time: int
    length: float
    cost: float
    cap_min: float
    cap_max: float

    @property
    def waiting(self) -> bool:
        return self.origin == self.dest


@dataclass(frozen=True)
class NetworkSpec:
    nodes: tuple
    links: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        self.validate()

    def validate(self):
        ids = [nd.id for nd in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate node ids")
        known = set(ids)
        seen = set()
        for k, ln in enumerate(self.links):
            where = f"links[{k}]"
            if ln.origin not in known or ln.dest not in known:
                raise ValueError(f"{where}: unknown endpoint")
            if ln.origin == ln.dest:
                raise ValueError(f"{where}: self-loop; waiting is implicit at every node")
            if (ln.origin, ln.dest) in seen:
                raise ValueError(f"{where}: duplicate link")
            seen.add((ln.origin, ln.dest))
            if int(ln.travel_time) != ln.travel_time or ln.travel_time < 1:
                raise ValueError(f"{where}.travel_time: must be an integer >= 1")
            _check_caps(where, ln.cap_min, ln.cap_max, ln.cost, ln.length)
        for k, nd in enumerate(self.nodes):
            _check_caps(f"nodes[{k}]", nd.cap_min, nd.cap_max, nd.storage_cost, 0.0)

    @property
    def node_index(self) -> dict:
        return {nd.id: i for i, nd in enumerate(self.nodes)}

    def arcs(self) -> tuple:
        """Links in spec order, then one waiting arc per node (travel time 1)."""
        idx = self.node_index
        out = [Arc(a, idx[ln.origin], idx[ln.dest], int(ln.travel_time), float(ln.length),
                   float(ln.cost), float(ln.cap_min), float(ln.cap_max))
               for a, ln in enumerate(self.links)]
        base = len(out)
        out += [Arc(base + i, i, i, 1, 0.0, float(nd.storage_cost), float(nd.cap_min),
                    float(nd.cap_max)) for i, nd in enumerate(self.nodes)]
        return tuple(out)

    def od_pairs(self) -> list:
        return [(r.id, s.id) for r in self.nodes for s in self.nodes if r.id != s.id]

    @classmethod
    def line(cls, n_nodes: int, *, travel_time=1, length=1.0, link_cost=4.0, storage_cost=1.0,
             cap_min=20.0, cap_max=80.0):
        """Nodes 1..n in a line, links both ways between neighbours."""
        nodes = [Node(i, storage_cost, cap_min, cap_max) for i in range(1, n_nodes + 1)]
        links = []
        for i in range(1, n_nodes):
            for a, b in ((i, i + 1), (i + 1, i)):
                links.append(Link(a, b, travel_time, length, link_cost, cap_min, cap_max))
        return cls(nodes, links)


def _check_caps(where, lo, hi, cost, length):
    if not 0 <= lo <= hi:
        raise ValueError(f"{where}: need 0 <= cap_min <= cap_max, got {lo}, {hi}")
    if cost < 0:
        raise ValueError(f"{where}: negative cost")
    if length < 0:
        raise ValueError(f"{where}: negative length")


@dataclass(frozen=True)
class TimeExpandedNetwork:
    horizon: int
    time_nodes: tuple        # (node position, t) for t in 0..horizon
    movement_arcs: tuple     # (arc index, t): (i, t) -> (j, t + t_ij)
    waiting_arcs: tuple      # (arc index, t): (i, t) -> (i, t + 1)
    entry_arcs: tuple        # node positions receiving deployed vehicles at t = 2
    exit_arcs: tuple         # (node position, t) for t in 2..horizon
    warnings: tuple = field(default=())

    def arcs_starting(self, t: int) -> list:
        return [a for a, s in self.movement_arcs + self.waiting_arcs if s == t]


def build_network(spec: NetworkSpec, horizon: int) -> TimeExpandedNetwork:
    """Replicate nodes over 0..horizon; drop arcs whose head passes the horizon."""
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    arcs = spec.arcs()
    V = len(spec.nodes)
    warnings = []
    moves, waits = [], []
    for arc in arcs:
        if arc.travel_time > horizon:
            msg = f"link {spec.nodes[arc.origin].id}->{spec.nodes[arc.dest].id} " \
                  f"travel time {arc.travel_time} exceeds the horizon; no arcs"
            warnings.append(msg)
            log.warning(msg)
            continue
        starts = [(arc.index, t) for t in range(0, horizon - arc.travel_time + 1)]
        (waits if arc.waiting else moves).extend(starts)
    return TimeExpandedNetwork(
        horizon,
        tuple((i, t) for t in range(horizon + 1) for i in range(V)),
        tuple(moves),
        tuple(waits),
        tuple(range(V)),
        tuple((i, t) for t in range(2, horizon + 1) for i in range(V)),
        tuple(warnings),
    )
