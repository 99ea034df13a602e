import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from savsddp.lp import solve
from savsddp.msslp import (NoiseSet, ScenarioCapError, StagedProblem, StageTemplate,
                           aggregate_stages, cost_to_go, extensive_form, instantiate_subproblem,
                           solve_extensive_form, validate)
from savsddp.sddp import Cut, CutPool

from toys import inventory, two_stage_deterministic


def test_well_formed_problem_has_no_diagnostics():
    assert validate(two_stage_deterministic()) == []
    assert validate(inventory([[1, 3], [2, 4]])) == []


def test_wrong_B_columns_gives_one_mismatch():
    p = two_stage_deterministic()
    s1 = p.stages[1]
    bad = StageTemplate(s1.cost, s1.A, sp.csr_matrix([[1.0, 0.0]]), s1.rhs, s1.lower, s1.upper,
                        s1.state_vars)
    diags = validate(StagedProblem([p.stages[0], bad], None))
    assert [d.kind for d in diags] == ["dimension-mismatch"]
    assert diags[0].stage == 1


def test_empty_noise_gives_one_diagnostic():
    p = two_stage_deterministic()
    diags = validate(StagedProblem(p.stages, [None, NoiseSet(np.zeros((0, 1)))]))
    assert [d.kind for d in diags] == ["empty-noise"]


def test_validate_has_no_side_effects():
    p = inventory([[1, 3]])
    before = [s.A.toarray().copy() for s in p.stages]
    validate(p)
    validate(p)
    for a, s in zip(before, p.stages):
        np.testing.assert_array_equal(a, s.A.toarray())


def test_final_stage_has_no_value_variable():
    p = inventory([[1, 3]])
    lp = instantiate_subproblem(p, 1, [2.0], 0, CutPool(p))
    assert lp.n_vars == p.stages[1].n_vars
    assert "cut" not in lp.row_tags


def test_cut_rows_and_single_value_variable():
    p = inventory([[1, 3], [2]])
    pool = CutPool(p)
    for k in range(3):
        pool.add(Cut(2, [-float(k)], float(k)))
    lp = instantiate_subproblem(p, 1, [1.0], 1, pool)
    assert lp.row_tags.count("cut") == 3
    assert lp.var_names is None or lp.var_names.count("theta") == 1
    assert lp.n_vars == p.stages[1].n_vars + 1 + 3


def test_steep_cut_rows_are_scaled_without_changing_the_optimum():
    p = inventory([[1, 3], [2]])
    pool = CutPool(p)
    pool.add(Cut(2, [-2.0e5], 1.0e6))
    pool.add(Cut(2, [-0.5], 3.0))
    lp = instantiate_subproblem(p, 1, [1.0], 1, pool)
    cut_rows = lp.A.toarray()[[i for i, tag in enumerate(lp.row_tags) if tag == "cut"]]
    np.testing.assert_allclose(np.abs(cut_rows[:, :-2]).max(axis=1), [1.0, 1.0])
    # theta still sits on the upper envelope of the cuts
    out = solve(lp, "simplex")
    assert out.objective == pytest.approx(solve(lp, "highs").objective, abs=1e-9)
    stock = out.x[p.stages[1].state_vars][0]
    theta = out.x[p.stages[1].n_vars]
    assert theta == pytest.approx(max(1.0e6 - 2.0e5 * stock, 3.0 - 0.5 * stock, 0.0), abs=1e-6)


def test_zero_state_and_zero_noise_keep_base_rhs():
    p = two_stage_deterministic()
    lp = instantiate_subproblem(p, 1, [0.0], 0)
    np.testing.assert_array_equal(lp.b, p.stages[1].rhs)


def test_deterministic_extensive_form_matches_chained_lp():
    p = inventory([[3.0], [5.0], [1.0]])
    _, out = solve_extensive_form(p)
    chained = aggregate_stages(p, (0,)).staged
    one = solve(instantiate_subproblem(chained, 0, np.zeros(0), 0))
    assert out.objective == pytest.approx(one.objective, abs=1e-9)
    assert validate(two_stage_deterministic()) == []
    assert solve_extensive_form(two_stage_deterministic())[1].objective == pytest.approx(6.0)


def test_two_by_two_tree_weights():
    p = inventory([[1, 3], [2, 4]])
    ef = extensive_form(p)
    leaves = [nd for nd in ef.nodes if nd.stage == 2]
    assert len(leaves) == 4
    assert all(nd.probability == pytest.approx(0.25) for nd in leaves)
    # leaf cost coefficients are a quarter of the stage cost
    for nd in leaves:
        np.testing.assert_allclose(ef.lp.c[nd.offset:nd.offset + 4], 0.25 * p.stages[2].cost)
    assert len(ef.scenarios()) == 4


def test_inventory_extensive_form_by_hand():
    # one stochastic stage: demand 1 or 3, buy at 1 now or 2 later, shortage 5
    p = inventory([[1, 3]], holding=0.0)
    _, out = solve_extensive_form(p)
    # buy 1 now; the high scenario orders 2 more at 2 each: 1 + 0.5 * 4
    assert out.objective == pytest.approx(3.0)


def test_scenario_cap():
    p = inventory([[1, 2, 3]] * 3)
    with pytest.raises(ScenarioCapError):
        extensive_form(p, max_scenarios=26)
    assert len(extensive_form(p, max_scenarios=27).scenarios()) == 27


@settings(max_examples=20, deadline=None)
@given(perm=st.permutations(range(3)), perm2=st.permutations(range(2)))
def test_extensive_form_invariant_to_noise_order(perm, perm2):
    p = inventory([[1, 2, 4], [0.5, 3]])
    base = solve_extensive_form(p)[1].objective
    order = {0: [0], 1: list(perm), 2: list(perm2)}
    assert solve_extensive_form(p, order=order)[1].objective == pytest.approx(base, abs=1e-9)


def test_cost_to_go_matches_manual_average():
    p = inventory([[1, 3]], holding=0.0)
    # from stock 2: demand 1 -> 0; demand 3 -> order 1 at 2
    assert cost_to_go(p, 1, [2.0]) == pytest.approx(0.5 * 0 + 0.5 * 2)


@pytest.mark.parametrize("bounds", [None, (0, 1, 3), (0, 1, 2, 3), (0, 1, 3, 4)])
def test_aggregation_is_exact(bounds):
    p = inventory([[1, 3], [2.0], [0.5, 2.5], [1.0]])
    agg = aggregate_stages(p, bounds)
    assert validate(agg.staged) == []
    ref = solve_extensive_form(p)[1].objective
    assert solve_extensive_form(agg.staged)[1].objective == pytest.approx(ref, abs=1e-9)
    assert agg.staged.scenario_count() == p.scenario_count()
    block_x = [np.arange(s.n_vars, dtype=float) for s in agg.staged.stages]
    parts = agg.expand(block_x)
    assert [len(x) for x in parts] == [s.n_vars for s in p.stages]
    for t in range(p.n_stages):
        assert t in agg.blocks[agg.block_of(t)]


@pytest.mark.parametrize("bounds", [(0, 2), (0, 3), (1, 3)])
def test_aggregation_rejects_anticipative_blocks(bounds):
    p = inventory([[1, 3], [2.0], [0.5, 2.5], [1.0]])
    with pytest.raises(ValueError):
        aggregate_stages(p, bounds)


def test_default_boundaries_follow_information():
    p = inventory([[1, 3], [2.0], [0.5, 2.5], [1.0]])
    assert aggregate_stages(p).blocks == ((0,), (1, 2), (3, 4))
    det = inventory([[1.0], [2.0], [3.0]])
    assert aggregate_stages(det).blocks == ((0, 1, 2), (3,))
