import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hiereval.flow import (
    DP, DT, SINK, SOURCE, CostMatrix, FlowEdge, InfeasibleFlow, PairingNetwork,
    build_pairing_network, check_flow, nearest_pairing_cost, pred_vertex,
    solve_min_cost_flow, solve_pairing, true_vertex,
)
from hiereval.pair_measures import GIE_BOUNDS, mgia_bounds
from oracles import BudgetExceeded, OracleBudget, brute_force_pairing


def _edge_set(net):
    return {(e.tail, e.head, e.lower, e.upper) for e in net.edges}


def test_single_pair_network_shape():
    net = build_pairing_network(CostMatrix.from_pairs([[2]], 5), 1, 1, 1, 1)
    p, t = pred_vertex(0), true_vertex(0)
    assert _edge_set(net) == {
        (SOURCE, p, 1, 1), (SOURCE, DP, 0, 1), (p, t, 0, 1), (p, DT, 0, 1),
        (DP, t, 0, 1), (t, SINK, 1, 1), (DT, SINK, 0, 1), (SINK, SOURCE, 0, 2),
    }


def test_gie_network_two_by_three():
    net = build_pairing_network(CostMatrix.from_pairs([[1, 2, 3], [4, 5, 6]], 5), *GIE_BOUNDS)
    pairing = [e for e in net.edges if SOURCE not in (e.tail, e.head) and SINK not in (e.tail, e.head)]
    # 2x3 real pairs, 2 to the default true class, 3 from the default predicted class
    assert len(pairing) == 11
    assert all((e.lower, e.upper) == (1, 1) for e in net.edges if e.head == SINK and e.tail != DT)
    assert not any(e.tail == DP and e.head == DT for e in net.edges)


def test_mgia_network_bounds():
    m, n = 2, 3
    net = build_pairing_network(CostMatrix.from_pairs([[1] * n] * m, 5), *mgia_bounds(m, n))
    for e in net.edges:
        if e.tail == SOURCE and e.head != DP:
            assert (e.lower, e.upper) == (1, n)
        if e.head == SINK and e.tail != DT:
            assert (e.lower, e.upper) == (1, m)
    assert net.edges[net.edge_index(SINK, SOURCE)].upper == m * n + n * m


def test_forbidden_pairs_have_no_edge():
    net = build_pairing_network(CostMatrix.from_pairs([[math.inf, 1]], 5), *GIE_BOUNDS)
    with pytest.raises(KeyError):
        net.edge_index(pred_vertex(0), true_vertex(0))


def test_bad_bounds_rejected():
    matrix = CostMatrix.from_pairs([[1]], 5)
    with pytest.raises(ValueError):
        build_pairing_network(matrix, 2, 1, 1, 1)
    with pytest.raises(ValueError):
        build_pairing_network(matrix, -1, 1, 1, 1)


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        CostMatrix.from_pairs([[-1]], 5)


def test_worked_example_costs():
    matrix = CostMatrix.from_pairs([[2], [2]], 5)
    assert solve_pairing(matrix, *GIE_BOUNDS).total_cost == 7
    assert solve_pairing(matrix, *mgia_bounds(2, 1)).total_cost == 4
    exact = solve_pairing(CostMatrix.from_pairs([[0]], 5), *GIE_BOUNDS)
    assert exact.total_cost == 0 and exact.pairs == {(0, 0)}


def test_infeasible_lower_bounds():
    net = PairingNetwork((SOURCE, SINK), (FlowEdge(SOURCE, SINK, 2, 1),), (1, 1, 1, 1), 0, 0)
    with pytest.raises(InfeasibleFlow):
        solve_min_cost_flow(net)
    matrix = CostMatrix(((math.inf, math.inf), (math.inf, 0.0)), 5.0)
    with pytest.raises(InfeasibleFlow):
        solve_pairing(matrix, *GIE_BOUNDS)


@st.composite
def cost_matrices(draw, max_m=4, max_n=4, forbid=False):
    m, n = draw(st.integers(1, max_m)), draw(st.integers(1, max_n))
    cell = st.integers(0, 9).map(float)
    if forbid:
        cell = st.one_of(cell, st.just(math.inf))
    rows = [[draw(cell) for _ in range(n)] for _ in range(m)]
    return CostMatrix.from_pairs(rows, draw(st.integers(1, 9)), n=n)


@given(cost_matrices(forbid=True), st.sampled_from(["gie", "mgia"]))
def test_flow_invariants(matrix, kind):
    bounds = GIE_BOUNDS if kind == "gie" else mgia_bounds(matrix.m, matrix.n)
    net = build_pairing_network(matrix, *bounds)
    for e in net.edges:
        assert 0 <= e.lower <= e.upper
    result = solve_min_cost_flow(net)
    check_flow(net, result)
    assert all(v == int(v) for v in result.flow.values())


@given(cost_matrices(forbid=True), st.sampled_from(["gie", "mgia"]))
def test_flow_matches_enumeration(matrix, kind):
    bounds = GIE_BOUNDS if kind == "gie" else mgia_bounds(matrix.m, matrix.n)
    assert solve_pairing(matrix, *bounds).total_cost == brute_force_pairing(matrix, bounds)


@given(cost_matrices(), st.sampled_from(["gie", "mgia"]), st.data())
def test_raising_a_cost_never_lowers_total(matrix, kind, data):
    bounds = GIE_BOUNDS if kind == "gie" else mgia_bounds(matrix.m, matrix.n)
    i, j = data.draw(st.integers(0, matrix.m - 1)), data.draw(st.integers(0, matrix.n - 1))
    rows = [list(r) for r in matrix.costs]
    rows[i][j] += data.draw(st.integers(1, 5))
    raised = CostMatrix(tuple(tuple(r) for r in rows), matrix.default_cost)
    assert solve_pairing(raised, *bounds).total_cost >= solve_pairing(matrix, *bounds).total_cost


@given(cost_matrices())
def test_many_to_many_never_worse_than_one_to_one(matrix):
    gie_cost = solve_pairing(matrix, *GIE_BOUNDS).total_cost
    mgia_cost = solve_pairing(matrix, *mgia_bounds(matrix.m, matrix.n)).total_cost
    assert mgia_cost <= gie_cost
    # nearest-counterpart pairing is feasible for the many-to-many network
    assert mgia_cost <= nearest_pairing_cost(matrix)


def test_nearest_pairing_is_not_always_optimal():
    # both predicted classes prefer their own true class at 1, but sharing a
    # single edge at 2 among all three is cheaper than two separate edges
    matrix = CostMatrix.from_pairs([[1, 2], [9, 1]], 5)
    assert nearest_pairing_cost(matrix) == 2
    assert solve_pairing(matrix, *mgia_bounds(2, 2)).total_cost == 2
    matrix = CostMatrix.from_pairs([[2, 2], [1, 9], [9, 1]], 5)
    assert solve_pairing(matrix, *mgia_bounds(3, 2)).total_cost == 4
    assert nearest_pairing_cost(matrix) == 4


def test_oracle_budget():
    matrix = CostMatrix.from_pairs([[1] * 5] * 5, 5)
    with pytest.raises(BudgetExceeded):
        brute_force_pairing(matrix, GIE_BOUNDS)
    assert brute_force_pairing(CostMatrix.from_pairs([[0]], 5), GIE_BOUNDS) == 0
    with pytest.raises(BudgetExceeded):
        brute_force_pairing(matrix, GIE_BOUNDS, OracleBudget(max_pred=5, max_true=5))
    square = CostMatrix.from_pairs([[1] * 3] * 3, 5)
    assert brute_force_pairing(square, GIE_BOUNDS, OracleBudget(max_pred=3, max_true=3)) == 3


def test_oracle_randomized_thousand():
    rng = random.Random(7)
    for _ in range(1000):
        m, n = rng.randint(1, 4), rng.randint(1, 4)
        rows = [[float(rng.randint(0, 9)) for _ in range(n)] for _ in range(m)]
        matrix = CostMatrix.from_pairs(rows, rng.randint(1, 9))
        for bounds in (GIE_BOUNDS, mgia_bounds(m, n)):
            assert solve_pairing(matrix, *bounds).total_cost == brute_force_pairing(matrix, bounds)
