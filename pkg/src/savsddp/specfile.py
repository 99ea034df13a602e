"""JSON model files: network, demand, weights and options.

Errors name the offending key path, e.g. ``demand.departures[1].od[0].expected``.
"""
from __future__ import annotations

import json
import math

from .demand import Departure, DemandSpec
from .network import Link, NetworkSpec, Node
from .sav import SavOptions, Weights


class SpecError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _get(obj, key, path, kind, default=...):
    if not isinstance(obj, dict):
        raise SpecError(path, "expected an object")
    if key not in obj:
        if default is ...:
            raise SpecError(f"{path}.{key}" if path else key, "missing")
        return default
    return _typed(obj[key], kind, f"{path}.{key}" if path else key)


def _typed(value, kind, path):
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SpecError(path, f"expected a number, got {type(value).__name__}")
        if math.isnan(value):
            raise SpecError(path, "NaN is not allowed")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise SpecError(path, f"expected an integer, got {type(value).__name__}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise SpecError(path, "expected true or false")
        return value
    if kind == "list":
        if not isinstance(value, list):
            raise SpecError(path, "expected a list")
        return value
    if kind == "object":
        if not isinstance(value, dict):
            raise SpecError(path, "expected an object")
        return value
    if kind == "id":
        if not isinstance(value, (str, int)) or isinstance(value, bool):
            raise SpecError(path, "expected a string or integer id")
        return value
    raise AssertionError(kind)


def _cap_max(obj, path):
    v = obj.get("cap_max", None)
    return math.inf if v is None else _typed(v, "number", f"{path}.cap_max")


def _unknown(obj, allowed, path):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise SpecError(f"{path}.{extra[0]}" if path else extra[0], "unknown key")


def parse_network(obj, path="network") -> NetworkSpec:
    _typed(obj, "object", path)
    _unknown(obj, ("nodes", "links"), path)
    nodes = []
    for i, nd in enumerate(_get(obj, "nodes", path, "list")):
        p = f"{path}.nodes[{i}]"
        _typed(nd, "object", p)
        _unknown(nd, ("id", "storage_cost", "cap_min", "cap_max"), p)
        nodes.append(Node(_get(nd, "id", p, "id"), _get(nd, "storage_cost", p, "number", 1.0),
                          _get(nd, "cap_min", p, "number", 0.0), _cap_max(nd, p)))
    links = []
    for i, ln in enumerate(_get(obj, "links", path, "list", [])):
        p = f"{path}.links[{i}]"
        _typed(ln, "object", p)
        _unknown(ln, ("from", "to", "travel_time", "length", "cost", "cap_min", "cap_max"), p)
        links.append(Link(_get(ln, "from", p, "id"), _get(ln, "to", p, "id"),
                          _get(ln, "travel_time", p, "int", 1), _get(ln, "length", p, "number", 1.0),
                          _get(ln, "cost", p, "number", 1.0), _get(ln, "cap_min", p, "number", 0.0),
                          _cap_max(ln, p)))
    try:
        return NetworkSpec(nodes, links)
    except ValueError as exc:
        raise SpecError(path, str(exc)) from None


def parse_demand(obj, path="demand") -> DemandSpec:
    _typed(obj, "object", path)
    _unknown(obj, ("horizon", "departures", "booking_rate", "noise_halfwidth"), path)
    deps = []
    for i, d in enumerate(_get(obj, "departures", path, "list")):
        p = f"{path}.departures[{i}]"
        _typed(d, "object", p)
        _unknown(d, ("k", "latest_arrival", "od"), p)
        od = []
        for j, e in enumerate(_get(d, "od", p, "list")):
            q = f"{p}.od[{j}]"
            _typed(e, "object", q)
            _unknown(e, ("origin", "dest", "expected"), q)
            od.append((_get(e, "origin", q, "id"), _get(e, "dest", q, "id"),
                       _get(e, "expected", q, "number")))
        deps.append(Departure(_get(d, "k", p, "int"), _get(d, "latest_arrival", p, "int"),
                              tuple(od)))
    try:
        return DemandSpec(_get(obj, "horizon", path, "int"), tuple(deps),
                          _get(obj, "booking_rate", path, "number", 0.5),
                          _get(obj, "noise_halfwidth", path, "number", 0.2))
    except ValueError as exc:
        raise SpecError(path, str(exc)) from None


def parse_weights(obj, path="weights") -> Weights:
    _typed(obj, "object", path)
    _unknown(obj, ("alpha_T", "alpha_D", "alpha_N", "alpha_C", "alpha_P"), path)
    alpha_p = obj.get("alpha_P")
    try:
        return Weights(_get(obj, "alpha_T", path, "number", 1.0),
                       _get(obj, "alpha_D", path, "number", 1.0),
                       _get(obj, "alpha_N", path, "number", 1.0),
                       _get(obj, "alpha_C", path, "number", 1.0),
                       None if alpha_p is None else _typed(alpha_p, "number", f"{path}.alpha_P"))
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(path, str(exc)) from None


def parse_options(obj, path="options") -> SavOptions:
    _typed(obj, "object", path)
    _unknown(obj, ("rho", "dedicated", "benchmark_blind", "saa_samples", "seed"), path)
    try:
        return SavOptions(_get(obj, "rho", path, "number", 3.0),
                          _get(obj, "dedicated", path, "bool", False),
                          _get(obj, "benchmark_blind", path, "bool", False),
                          _get(obj, "saa_samples", path, "int", 20),
                          _get(obj, "seed", path, "int", 0))
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(path, str(exc)) from None


def parse_model(obj) -> dict:
    """``{"network", "demand", "weights", "options"}`` objects from parsed JSON.

    Keys outside those four are returned untouched under ``"extra"``.
    """
    _typed(obj, "object", "")
    net = parse_network(_get(obj, "network", "", "object"))
    dem = parse_demand(_get(obj, "demand", "", "object"))
    known = {nd.id for nd in net.nodes}
    for i, d in enumerate(dem.departures):
        for j, (r, s, _) in enumerate(d.od):
            for name, v in (("origin", r), ("dest", s)):
                if v not in known:
                    raise SpecError(f"demand.departures[{i}].od[{j}].{name}", f"unknown node {v!r}")
    return {
        "network": net,
        "demand": dem,
        "weights": parse_weights(obj.get("weights", {})),
        "options": parse_options(obj.get("options", {})),
        "extra": {k: v for k, v in obj.items()
                  if k not in ("network", "demand", "weights", "options")},
    }


def load_model(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError("", f"{path}: invalid JSON ({exc})") from None
    return parse_model(obj)


def model_to_dict(network: NetworkSpec, demand: DemandSpec, weights: Weights = None,
                  options: SavOptions = None) -> dict:
    """Inverse of ``parse_model`` (``json.dumps``-ready)."""
    def cap(v):
        return None if math.isinf(v) else v

    out = {
        "network": {
            "nodes": [{"id": n.id, "storage_cost": n.storage_cost, "cap_min": n.cap_min,
                       "cap_max": cap(n.cap_max)} for n in network.nodes],
            "links": [{"from": ln.origin, "to": ln.dest, "travel_time": ln.travel_time,
                       "length": ln.length, "cost": ln.cost, "cap_min": ln.cap_min,
                       "cap_max": cap(ln.cap_max)} for ln in network.links],
        },
        "demand": {
            "horizon": demand.horizon,
            "departures": [{"k": d.k, "latest_arrival": d.latest_arrival,
                            "od": [{"origin": r, "dest": s, "expected": u} for r, s, u in d.od]}
                           for d in demand.departures],
            "booking_rate": demand.booking_rate,
            "noise_halfwidth": demand.noise_halfwidth,
        },
    }
    if weights is not None:
        out["weights"] = {"alpha_T": weights.alpha_T, "alpha_D": weights.alpha_D,
                          "alpha_N": weights.alpha_N, "alpha_C": weights.alpha_C,
                          "alpha_P": weights.alpha_P}
    if options is not None:
        out["options"] = {"rho": options.rho, "dedicated": options.dedicated,
                          "benchmark_blind": options.benchmark_blind,
                          "saa_samples": options.saa_samples, "seed": options.seed}
    return out
