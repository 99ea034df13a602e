from collections import defaultdict
from dataclasses import replace

import numpy as np
import pytest

from savsddp.instances import five_node_line, toy2
from savsddp.msslp import solve_extensive_form, validate
from savsddp.network import Link, NetworkSpec
from savsddp.sav import (SavOptions, Weights, build_state_layout, compile_sav_problem,
                         extract_performance)
from savsddp.scenarios import DemandSample

TOL = 1e-6
CELL = (("A", "B", 2),)


def ef_paths(problem, method="simplex"):
    """Optimal extensive-form objective and one per-stage path per scenario."""
    ef, out = solve_extensive_form(problem.staged, method=method)
    assert out.optimal
    paths = [[ef.node_solution(out.x, nd) for nd in chain] for chain in ef.scenarios()]
    return out.objective, paths


def as_dict(problem, path):
    return [dict(zip(problem.var_keys[t], x)) for t, x in enumerate(path)]


def toy_dedicated(dedicated=True, weights=None):
    """Toy-2 network, booking rate 0.5, two pre-booked and two on-demand outcomes."""
    net, spec, w, o, _ = toy2()
    samples = {1: DemandSample(1, "prebooked", CELL, np.array([[1.0], [2.0]])),
               2: DemandSample(2, "ondemand", CELL, np.array([[1.0], [3.0]]))}
    return compile_sav_problem(net, spec.with_rate(0.5), weights or w,
                               replace(o, dedicated=dedicated), samples)


@pytest.mark.parametrize("method", ["simplex", "highs"])
def test_toy2_optimum_and_report(method):
    net, spec, w, o, samples = toy2()
    prob = compile_sav_problem(net, spec, w, o, samples)
    assert validate(prob.staged) == []
    obj, (path,) = ef_paths(prob, method)
    assert obj == pytest.approx(10.0, abs=1e-6)
    rep = extract_performance(prob, path)
    assert (rep.T_total, rep.D_total, rep.N, rep.C) == pytest.approx((2.0, 2.0, 2.0, 4.0))
    assert rep.penalty_shortfall == pytest.approx(0.0, abs=1e-9)
    assert rep.penalty_early_exit == pytest.approx(0.0, abs=1e-9)
    assert rep.objective == pytest.approx(obj)


def test_toy2_zero_demand():
    net, spec, w, o, samples = toy2(demand=0.0)
    prob = compile_sav_problem(net, spec, w, o, samples)
    obj, (path,) = ef_paths(prob)
    assert obj == pytest.approx(0.0, abs=1e-9)
    rep = extract_performance(prob, path)
    assert rep.N == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(path[0], 0.0, atol=1e-9)
    zero = extract_performance(prob, [np.zeros_like(x) for x in path])
    assert all(v == 0.0 for v in vars(zero).values())


def test_early_exit_penalty_in_report():
    net, spec, w, o, samples = toy2()
    prob = compile_sav_problem(net, spec, w, o, samples)
    path = [np.zeros(s.n_vars) for s in prob.staged.stages]
    path[3][prob.var_index(3)[("xexit", "nd", 0, 3)]] = 1.5
    rep = extract_performance(prob, path)
    assert rep.penalty_early_exit == pytest.approx(w.alpha_P * 1.5)
    with pytest.raises(ValueError):
        extract_performance(prob, path[:-1])


def test_layout_is_stable_and_dedicated_doubles_vehicle_slots():
    net, spec, w, o, _ = toy2()
    a = build_state_layout(net, spec, o)
    assert a == build_state_layout(net, spec, o)
    assert [a.count(t) for t in range(7)] == [4, 6, 14, 14, 14, 10, 0]
    plain = build_state_layout(net, spec.with_rate(0.5), o)
    ded = build_state_layout(net, spec.with_rate(0.5), replace(o, dedicated=True))
    for t in range(1, 6):
        for kind in ("deploy", "x"):
            assert ded.kinds(t).get(kind, 0) == 2 * plain.kinds(t).get(kind, 0)
    prob = toy_dedicated()
    assert any(k[0] == "Y" for k in prob.var_keys[3])
    assert not any(k[0] == "Y" for keys in compile_sav_problem(
        net, spec.with_rate(0.5), w, o).var_keys for k in keys)


def test_two_step_link_has_two_in_transit_slots():
    net, spec, w, o, _ = toy2()
    slow = NetworkSpec(net.nodes, (Link("A", "B", 2, 1.0, 1.0, 0.0, 10.0), net.links[1]))
    layout = build_state_layout(slow, spec, o)
    for t in (3, 4):
        xs = [k for k in layout.slots[t] if k[0] == "x" and k[2] == 0]
        assert [k[3] for k in xs] == [t - 1, t]


def test_five_node_line_settings():
    net, spec, w, o = five_node_line()
    assert len(net.nodes) == 5 and len(net.links) == 8
    assert all(ln.travel_time == 1 and ln.cost == 4.0 for ln in net.links)
    assert all(ln.cap_min == 20.0 and ln.cap_max == 80.0 for ln in net.links)
    assert all(nd.storage_cost == 1.0 and nd.cap_max == 80.0 for nd in net.nodes)
    assert spec.horizon == 16
    assert [(d.k, d.latest_arrival) for d in spec.departures] == [(2, 10), (5, 10)]
    assert spec.total_expected() == pytest.approx(1000.0)
    assert (w.alpha_T, w.alpha_D, w.alpha_N, w.alpha_C) == (10.0, 1.0, 1.0, 1.0)
    assert w.alpha_P == 10_000.0
    assert o.rho == 3.0
    prob = compile_sav_problem(net, spec, w, replace(o, saa_samples=2))
    assert prob.staged.n_stages == 17
    assert validate(prob.staged) == []


def test_weights_validation():
    with pytest.raises(ValueError):
        Weights(1, 1, 1, 1, alpha_P=1.0)
    with pytest.raises(ValueError):
        Weights(-1, 1, 1, 1)
    with pytest.raises(ValueError):
        SavOptions(rho=0)
    assert Weights(2, 1, 1, 1).alpha_P == 2000.0


# --------------------------------------------------------------------------
# physical invariants on optimal extensive-form paths


@pytest.fixture(scope="module")
def dedicated_solution():
    prob = toy_dedicated()
    obj, paths = ef_paths(prob)
    return prob, obj, [as_dict(prob, p) for p in paths]


def test_vehicle_and_traveler_conservation(dedicated_solution):
    prob, _, paths = dedicated_solution
    arcs = prob.network.arcs()
    T = prob.demand.horizon
    for v in paths:
        for c in ("nd", "ded"):
            for i in range(2):
                for t in range(2, T + 1):
                    out = sum(val for k, val in v[t].items()
                              if k[0] == "x" and k[1] == c and k[3] == t and arcs[k[2]].origin == i)
                    out += v[t][("xexit", c, i, t)]
                    inflow = v[1][("deploy", c, i)] if t == 2 else 0.0
                    inflow += sum(v[t - a.travel_time].get(("x", c, a.index, t - a.travel_time), 0)
                                  for a in arcs if a.dest == i and t - a.travel_time >= 2)
                    assert out == pytest.approx(inflow, abs=TOL)
        for tc, k, s in prob.groups:
            for t in range(k + 1, T + 1):
                for i in range(2):
                    if i == s:
                        continue
                    out = sum(val for key, val in v[t].items() if key[0] == "y"
                              and key[1:4] == (tc, k, s) and arcs[key[4]].origin == i)
                    out += v[t].get(("ystrand", tc, k, s, i), 0.0)
                    inflow = sum(v[t - 1].get(("y", tc, k, s, a.index, t - 1), 0.0)
                                 for a in arcs if a.dest == i)
                    assert out == pytest.approx(inflow, abs=TOL)


def test_fleet_conservation(dedicated_solution):
    prob, _, paths = dedicated_solution
    T = prob.demand.horizon
    for v in paths:
        N = v[1][("N",)]
        exited = 0.0
        for t in range(2, T + 1):
            present = sum(val for k, val in v[t].items() if k[0] in ("x", "xexit"))
            assert present == pytest.approx(N - exited, abs=TOL)
            exited += sum(val for k, val in v[t].items() if k[0] == "xexit")


def test_riders_within_capacity_and_boarding_split(dedicated_solution):
    prob, _, paths = dedicated_solution
    rho = prob.options.rho
    arcs = prob.network.arcs()
    for v in paths:
        for t in range(2, prob.demand.horizon + 1):
            for a in arcs:
                if a.waiting or ("x", "nd", a.index, t) not in v[t]:
                    continue
                Y = sum(val for k, val in v[t].items() if k[0] == "Y" and k[3] == a.index)
                y = sum(val for k, val in v[t].items()
                        if k[0] == "y" and k[4] == a.index and k[5] == t)
                assert Y <= rho * v[t][("x", "ded", a.index, t)] + TOL
                assert y - Y <= rho * v[t][("x", "nd", a.index, t)] + TOL
                for k, val in v[t].items():
                    if k[0] == "Y":
                        assert -TOL <= val <= v[t][("y", "pre", k[1], k[2], k[3], t)] + TOL


def test_no_penalties_and_full_arrival(dedicated_solution):
    prob, _, paths = dedicated_solution
    Tk = prob.demand.latest_arrival(2)
    for v in paths:
        assert all(val <= TOL for t in range(len(v)) for k, val in v[t].items() if k[0] == "P")
        for tc in ("pre", "od"):
            q = v[Tk][("Q", tc, 2, 1, Tk)]
            total = v[1][("tot", "pre", 2, 1)] if tc == "pre" else v[2][("tot", "od", 2, 1)]
            assert q == pytest.approx(total, abs=TOL)


def test_disabling_dedicated_class_never_helps(dedicated_solution):
    _, obj_ded, _ = dedicated_solution
    obj_plain, _ = ef_paths(toy_dedicated(dedicated=False))
    assert obj_plain >= obj_ded - TOL


def test_weight_scaling_keeps_the_argmin():
    w = Weights(1.0, 2.0, 1.0, 1.0, 100.0)
    base = toy_dedicated(weights=w)
    scaled = toy_dedicated(weights=w.scaled(3.0))
    obj, _ = ef_paths(base)
    ef, out = solve_extensive_form(scaled.staged)
    assert out.objective == pytest.approx(3.0 * obj, rel=1e-9)
    # the scaled optimum is optimal for the original weights too
    ef_base, _ = solve_extensive_form(base.staged)
    assert ef_base.lp.c @ out.x == pytest.approx(obj, rel=1e-9)


def test_travel_time_decomposes(dedicated_solution):
    prob, _, paths = dedicated_solution
    ef, out = solve_extensive_form(prob.staged)
    for chain in ef.scenarios():
        rep = extract_performance(prob, [ef.node_solution(out.x, nd) for nd in chain])
        assert rep.T_total == pytest.approx(rep.T_riding + rep.T_waiting)
        per_class = defaultdict(float)
        assert rep.travelers_prebooked > 0 and rep.travelers_ondemand > 0
        per_class["pre"] = rep.time_per_prebooked * rep.travelers_prebooked
        per_class["od"] = rep.time_per_ondemand * rep.travelers_ondemand
        assert per_class["pre"] + per_class["od"] == pytest.approx(rep.T_total)


DIGEST = """
import hashlib
from savsddp.instances import desk
from savsddp.sav import compile_sav_problem
prob = compile_sav_problem(*desk())
h = hashlib.sha1(repr(prob.var_keys).encode())
for st in prob.staged.stages:
    for a in (st.cost, st.A.toarray(), st.B.toarray(), st.rhs, st.state_vars):
        h.update(a.tobytes())
print(h.hexdigest())
"""


def test_compiled_model_does_not_depend_on_hash_seed():
    import os
    import subprocess
    import sys
    digests = {subprocess.run([sys.executable, "-c", DIGEST], capture_output=True, text=True,
                              env=dict(os.environ, PYTHONHASHSEED=seed), check=True).stdout
               for seed in ("0", "1", "2")}
    assert len(digests) == 1
