import itertools
import random

import numpy as np
import pytest

from mba.colgen import (ColumnPool, CoverageError, DualValues, TupleColumn, colgen_solve,
                        columns_of, master_relaxation_lp, price, reduced_cost, solve_master_ip,
                        solve_master_lp, sub_lp)
from mba.exact import brute_force
from mba.greedy import greedy_post, greedy_standard
from mba.instance import MbaSolution, check_solution, generate_random, objective
from mba.lp import lp_solve
from oracles import partition_values

BALANCED = MbaSolution.from_rows([[0, 1], [1, 0]])     # tuples 3+2 and 1+4
SKEWED = MbaSolution.from_rows([[0, 0], [1, 1]])       # tuples 3+4 and 1+2


def all_paths(inst):
    for path in itertools.product(range(inst.n), repeat=inst.m):
        if all((path[j], path[j + 1]) in inst.arcs[j] for j in range(inst.m - 1)):
            yield path


def test_column_weight_and_feasibility(two_by_two):
    col = TupleColumn.of(two_by_two, (0, 1))
    assert col.weight == 5 and col.is_feasible(two_by_two)
    assert not TupleColumn((0, 5), 0).is_feasible(two_by_two)


def test_pool_deduplicates(two_by_two):
    pool = ColumnPool(columns_of(two_by_two, BALANCED))
    assert len(pool) == 2
    assert pool.add(TupleColumn.of(two_by_two, (0, 1))) is False
    assert len(pool) == 2


@pytest.mark.parametrize("sol,mean", [(BALANCED, 5.0), (SKEWED, 5.0)])
def test_master_lp_of_one_partition_is_mean_weight(two_by_two, sol, mean):
    cols = columns_of(two_by_two, sol)
    assert sum(c.weight for c in cols) / 2 == mean
    value, _ = solve_master_lp(two_by_two, ColumnPool(cols))
    assert value == pytest.approx(mean)


def test_master_lp_mean_weight_random():
    for seed in range(5):
        inst = generate_random(6, 4, 1.0, seed)
        cols = columns_of(inst, greedy_standard(inst))
        value, _ = solve_master_lp(inst, ColumnPool(cols))
        assert value == pytest.approx(sum(c.weight for c in cols) / inst.n)


def test_duals_satisfy_sub_constraints():
    inst = generate_random(5, 4, 2.0, 3)
    pool = ColumnPool(columns_of(inst, greedy_standard(inst)))
    for p in itertools.islice(all_paths(inst), 30):
        pool.add(TupleColumn.of(inst, p))
    for symmetric in (True, False):
        _, d = solve_master_lp(inst, pool, symmetric=symmetric)
        assert np.all(d.u >= -1e-12) and np.all(d.r >= -1e-12)
        assert d.r.sum() <= 1 + 1e-7
        assert d.k_star == int(np.argmin(d.r))
        for col in pool:
            lhs = sum(d.u[i, j] for j, i in enumerate(col.path))
            for k in range(inst.n):
                assert lhs <= col.weight * d.r[k] + 1e-7


def test_duplicate_column_row_keeps_lp_value(two_by_two):
    pool = ColumnPool(columns_of(two_by_two, SKEWED))
    base = lp_solve(sub_lp(two_by_two, pool)).value
    pool.columns.append(pool.columns[0])             # bypass deduplication on purpose
    assert lp_solve(sub_lp(two_by_two, pool)).value == pytest.approx(base)


def test_three_formulations_agree_on_tiny_pools():
    rng = random.Random(4)
    for trial in range(25):
        inst = generate_random(rng.randint(2, 3), rng.randint(2, 3), 1.5, rng.randrange(10**6))
        pool = ColumnPool(columns_of(inst, greedy_standard(inst)))
        paths = list(all_paths(inst))
        for p in rng.sample(paths, min(len(paths), 4)):
            pool.add(TupleColumn.of(inst, p))
        printed = lp_solve(sub_lp(inst, pool, symmetric=False)).value
        reduced = lp_solve(sub_lp(inst, pool, symmetric=True)).value
        master = lp_solve(master_relaxation_lp(inst, pool)).value
        assert printed == pytest.approx(reduced, abs=1e-6)
        assert printed == pytest.approx(master, abs=1e-6)


def test_coverage_error_lists_nodes(two_by_two):
    pool = ColumnPool([TupleColumn.of(two_by_two, (0, 1))])
    with pytest.raises(CoverageError) as err:
        solve_master_lp(two_by_two, pool)
    assert set(err.value.uncovered) == {(1, 0), (0, 1)}
    with pytest.raises(CoverageError):
        solve_master_ip(two_by_two, pool)


def test_reduced_costs_hand_set_duals(two_by_two):
    duals = DualValues(np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([0.5, 0.5]), 0)
    w = [[3, 4], [1, 2]]
    u = [[1, 0], [0, 0]]
    oracle = {}
    for sol in (BALANCED, SKEWED):
        for path in sol.assign:
            oracle[path] = sum(0.5 * w[i][j] - u[i][j] for j, i in enumerate(path))
    assert oracle == {(0, 1): 1.5, (1, 0): 2.5, (0, 0): 2.5, (1, 1): 1.5}
    cols, rcs, best = price(two_by_two, duals, L=1)
    for c, rc in zip(cols, rcs):
        assert rc == pytest.approx(oracle[c.path])
        assert reduced_cost(two_by_two, duals, c.path) == pytest.approx(oracle[c.path])
    assert best == min(rcs)


def test_price_with_zero_duals_returns_partition():
    inst = generate_random(8, 5, 2.0, 6)
    duals = DualValues(np.zeros((8, 5)), np.full(8, 1 / 8), 0)
    cols, rcs, _ = price(inst, duals, L=1)
    sol = MbaSolution.from_rows(sorted(c.path for c in cols))
    check_solution(inst, sol)
    assert rcs == pytest.approx([c.weight / 8 for c in cols])


def test_price_handles_negative_modified_weights():
    inst = generate_random(6, 4, 2.0, 8)
    rng = np.random.default_rng(0)
    duals = DualValues(rng.uniform(0, 30, (6, 4)), np.full(6, 1 / 6), 0)
    cols, rcs, _ = price(inst, duals, L=2)
    check_solution(inst, MbaSolution.from_rows(sorted(c.path for c in cols)))
    assert min(rcs) < 0


def test_master_ip_all_columns_two_by_two(two_by_two):
    pool = ColumnPool(TupleColumn.of(two_by_two, p) for p in all_paths(two_by_two))
    assert len(pool) == 4
    sol = solve_master_ip(two_by_two, pool)
    assert objective(two_by_two, sol) == 5


def test_master_ip_recovers_known_optimum():
    for seed in range(8):
        inst = generate_random(5, 4, 1.5, seed)
        best, opt = brute_force(inst)
        pool = ColumnPool(columns_of(inst, greedy_standard(inst)) + columns_of(inst, opt))
        sol = solve_master_ip(inst, pool)
        assert objective(inst, sol) == best
        lp_value, _ = solve_master_lp(inst, pool)
        assert objective(inst, sol) >= lp_value - 1e-6


def test_master_ip_matches_enumerated_covers():
    rng = random.Random(9)
    for trial in range(15):
        inst = generate_random(3, 3, 2.0, rng.randrange(10**6))
        paths = list(all_paths(inst))
        chosen = set(rng.sample(paths, min(len(paths), 6)))
        pool = ColumnPool(columns_of(inst, greedy_standard(inst)))
        for p in chosen:
            pool.add(TupleColumn.of(inst, p))
        pool_paths = {c.path for c in pool}
        w = inst.weights.tolist()
        arcs = [set(a) for a in inst.arcs]
        best = min(v for v, rows in partition_values(w, arcs)
                   if all(tuple(r) in pool_paths for r in rows))
        assert objective(inst, solve_master_ip(inst, pool)) == best


def test_colgen_two_by_two(two_by_two):
    report, sol = colgen_solve(two_by_two, time_limit=10, L=1)
    assert report.objective == 5 == objective(two_by_two, sol)


def test_colgen_invariants_small():
    for seed in range(6):
        inst = generate_random(10, 5, 2.2, seed)
        start = greedy_post(inst, 1)
        report, sol = colgen_solve(inst, time_limit=30, L=1, start=start)
        trace = report.extra["trace"]
        check_solution(inst, sol)
        assert report.objective == objective(inst, sol) <= objective(inst, start)
        assert report.objective >= report.lower_bound - 1e-6
        assert report.lower_bound == trace.lp_values[-1]
        assert all(b <= a + 1e-6 for a, b in zip(trace.lp_values, trace.lp_values[1:]))
        if trace.ip_value is not None:
            assert trace.lp_values[-1] <= trace.ip_value + 1e-6
            assert trace.ip_value >= report.objective - 1e-6 or trace.ip_value == report.objective
        assert trace.stop_reason
        assert report.extra["pricing_stop_rule"] == "R=3"
