import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import complete_instance, small_instances
from mba.exact import (SearchNode, SizeGuardError, _Search, _transport_feasible, brute_force,
                       min_completion, solve_exact, solve_window)
from mba.greedy import greedy_lookahead, greedy_standard
from mba.instance import (InfeasibleInstanceError, MbaInstance, Status, check_solution,
                          generate_random, objective)
from mba.matching import BipartiteProblem, bottleneck_assignment
from oracles import completion_table, optimum, partition_values


def _raw(inst):
    return inst.weights.tolist(), [set(a) for a in inst.arcs]


def test_completion_last_layer_and_single_path():
    inst = MbaInstance([[2, 5, 1]], [[(0, 0)], [(0, 0)]])
    c = min_completion(inst)
    assert c[0, 2] == 1 and c[0, 0] == 8


def test_completion_two_by_two(two_by_two):
    # 3 + min(4, 2) and 1 + min(4, 2)
    assert min_completion(two_by_two)[:, 0].tolist() == [5, 3]


def test_completion_unreachable_is_inf():
    inst = MbaInstance([[1, 1], [1, 1]], [[(0, 0)]])
    assert min_completion(inst)[1, 0] == float("inf")


@given(small_instances(horizontal=False))
def test_completion_matches_recursion(inst):
    w, arcs = _raw(inst)
    assert min_completion(inst).tolist() == completion_table(w, arcs)


def test_brute_force_two_by_two(two_by_two):
    val, sol = brute_force(two_by_two)
    assert val == 5 and objective(two_by_two, sol) == 5


def test_brute_force_single_tuple():
    inst = MbaInstance([[4, 0, 3]], [[(0, 0)], [(0, 0)]])
    assert brute_force(inst)[0] == 7


def test_brute_force_empty_layer_is_infeasible():
    inst = MbaInstance([[1, 1], [1, 1]], [[]])
    with pytest.raises(InfeasibleInstanceError):
        brute_force(inst)


def test_brute_force_size_guard():
    with pytest.raises(SizeGuardError):
        brute_force(generate_random(7, 2, 1, 0))
    with pytest.raises(SizeGuardError):
        brute_force(generate_random(2, 6, 1, 0))


@given(small_instances(max_n=4, max_m=4, horizontal=False))
def test_brute_force_matches_enumeration(inst):
    expect = optimum(*_raw(inst))
    if expect is None:
        with pytest.raises(InfeasibleInstanceError):
            brute_force(inst)
    else:
        assert brute_force(inst)[0] == expect


@pytest.mark.parametrize("twins", [False, True])
@given(inst=small_instances(max_n=4, max_m=4, horizontal=False))
def test_exact_matches_enumeration(twins, inst):
    expect = optimum(*_raw(inst))
    report, sol = solve_exact(inst, aggregate_twins=twins)
    if expect is None:
        assert report.status == Status.INFEASIBLE and sol is None
        return
    assert report.status == Status.OPTIMAL
    assert report.objective == expect == report.lower_bound
    check_solution(inst, sol)
    assert objective(inst, sol) == expect


@pytest.mark.parametrize("twins", [False, True])
@given(inst=small_instances(max_n=5, max_m=4, max_w=2))
def test_exact_on_tie_heavy_instances(twins, inst):
    report, sol = solve_exact(inst, aggregate_twins=twins)
    assert report.objective == brute_force(inst)[0]
    assert objective(inst, sol) == report.objective


def test_exact_horizontal_only():
    w = [[1, 2, 3], [4, 0, 0], [2, 2, 2]]
    inst = MbaInstance(w, [[(i, i) for i in range(3)]] * 2)
    report, sol = solve_exact(inst)
    assert report.status == Status.OPTIMAL and report.objective == 6
    assert sol.assign == ((0, 0, 0), (1, 1, 1), (2, 2, 2))


def test_exact_single_layer():
    inst = MbaInstance([[3], [9], [1]], [])
    report, _ = solve_exact(inst)
    assert report.objective == 9 and report.status == Status.OPTIMAL


def test_exact_not_worse_than_warm_start():
    for seed in range(10):
        inst = generate_random(8, 5, 1.5, seed)
        g = greedy_standard(inst)
        report, sol = solve_exact(inst, warm_start=g)
        assert report.objective <= objective(inst, g)
        assert objective(inst, sol) == report.objective


def test_exact_float_weights():
    inst = complete_instance([[0.5, 0.25], [0.1, 0.7]])
    report, sol = solve_exact(inst)
    # identity tuples weigh 0.75 and 0.8, the swapped ones 1.2 and 0.35
    assert report.objective == pytest.approx(0.8)
    assert report.objective == pytest.approx(optimum(*_raw(inst)))


def test_lower_bound_on_early_stop_is_admissible():
    rng = random.Random(11)
    for trial in range(25):
        inst = generate_random(6, 4, rng.choice([1.0, 2.0, 3.0]), rng.randrange(10**6))
        best = brute_force(inst)[0]
        for limit in (1, 3, 10):
            report, sol = solve_exact(inst, node_limit=limit)
            assert report.lower_bound <= best
            if report.status != Status.OPTIMAL:
                assert report.status in (Status.FEASIBLE, Status.TIME_LIMIT)
                assert report.objective >= best
            else:
                assert report.objective == best
            if sol is not None:
                assert objective(inst, sol) == report.objective


def test_time_limit_reports_timelimit_without_improvement():
    inst = generate_random(40, 10, 3.0, 1)
    report, sol = solve_exact(inst, time_limit=1e-9)
    assert report.status in (Status.TIME_LIMIT, Status.FEASIBLE, Status.OPTIMAL)
    assert report.lower_bound <= report.objective
    if report.status == Status.TIME_LIMIT:
        assert report.objective == objective(inst, greedy_standard(inst))


@given(small_instances(max_n=4, max_m=4, min_m=2))
def test_root_and_child_bounds_are_admissible(inst):
    w, arcs = _raw(inst)
    values = list(partition_values(w, arcs))
    search = _Search(w, inst.succ, range(inst.n), [w[k][0] for k in range(inst.n)],
                     inst.is_integral)
    root_b = search.root_bound()
    assert root_b <= min(v for v, _ in values)
    root = SearchNode(0, tuple(search.run0), search.start, root_b)
    for mate, val in search._stream(root):
        # best completion among partitions that use this matching into layer 2
        completions = [v for v, rows in values if tuple(r[1] for r in rows) == tuple(mate)]
        if completions:
            assert max(val, root_b) <= min(completions)


def test_window_with_two_layers_equals_bottleneck_assignment():
    rng = random.Random(2)
    for _ in range(100):
        n = rng.randint(1, 6)
        inst = generate_random(n, 2, rng.choice([0.5, 1, 2]), rng.randrange(10**6))
        fixed = list(range(n))
        rng.shuffle(fixed)
        offsets = [rng.randint(0, 50) for _ in range(n)]
        w = inst.weights
        value = {(k, s): offsets[k] + w[fixed[k], 0] + w[s, 1]
                 for k in range(n) for s in inst.succ[0][fixed[k]]}
        _, expect = bottleneck_assignment(BipartiteProblem(n, value))
        report, sol = solve_window(inst, offsets, fixed)
        assert report.objective == expect
        assert [row[0] for row in sol.assign] == fixed


def test_window_zero_offsets_identity_equals_exact():
    for seed in range(10):
        inst = generate_random(6, 4, 1.5, seed)
        a, _ = solve_window(inst, [0] * 6, list(range(6)))
        b, _ = solve_exact(inst)
        assert a.objective == b.objective


def test_window_rejects_non_permutation():
    inst = generate_random(3, 2, 1, 0)
    with pytest.raises(ValueError):
        solve_window(inst, [0, 0, 0], [0, 0, 1])


@given(small_instances(max_n=4, max_m=4))
def test_full_lookahead_is_exact(inst):
    sol = greedy_lookahead(inst, max(inst.m - 1, 1))
    assert objective(inst, sol) == optimum(*_raw(inst))


def _ships_by_enumeration(supply, capacity, allowed):
    if not supply:
        return True
    first, rest = supply[0], supply[1:]

    def split(k, left, cap):
        if left == 0:
            return _ships_by_enumeration(rest, cap, allowed[1:])
        if k == len(allowed[0]):
            return False
        h = allowed[0][k]
        for amount in range(min(left, cap[h]), -1, -1):
            cap2 = list(cap)
            cap2[h] -= amount
            if split(k + 1, left - amount, cap2):
                return True
        return False

    return split(0, first, list(capacity))


@given(st.data())
def test_transport_feasibility_matches_enumeration(data):
    nl = data.draw(st.integers(1, 4))
    nr = data.draw(st.integers(1, 4))
    supply = data.draw(st.lists(st.integers(0, 3), min_size=nl, max_size=nl))
    capacity = data.draw(st.lists(st.integers(0, 3), min_size=nr, max_size=nr))
    allowed = [data.draw(st.lists(st.integers(0, nr - 1), unique=True, max_size=nr))
               for _ in range(nl)]
    assert _transport_feasible(supply, capacity, allowed) == \
        _ships_by_enumeration(supply, capacity, allowed)
