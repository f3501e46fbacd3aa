"""Column generation matheuristic.

A column is one feasible tuple. The restricted master chooses ``n`` columns
covering every element while keeping the heaviest one light; its LP
relaxation is solved through the dual ("Sub") program, whose prices drive a
greedy pricing heuristic on modified weights ``r*w - u``. At the end an
exact-cover search over the pool solves the restricted integer master.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .greedy import greedy_post
from .instance import (MbaInstance, MbaSolution, SolveReport, Status,
                       check_solution, objective)
from .lp import LinearProgram, LPStatus, lp_solve

log = logging.getLogger(__name__)

REDUCED_COST_TOL = -1e-6
STALL_ROUNDS = 3


class CoverageError(ValueError):
    def __init__(self, uncovered):
        self.uncovered = list(uncovered)
        shown = ", ".join(f"({i + 1},{j + 1})" for i, j in self.uncovered[:10])
        super().__init__(f"pool leaves {len(self.uncovered)} nodes uncovered: {shown}")


@dataclass(frozen=True)
class TupleColumn:
    path: tuple[int, ...]
    weight: float

    @classmethod
    def of(cls, inst: MbaInstance, path) -> "TupleColumn":
        path = tuple(int(x) for x in path)
        return cls(path, inst.weights[list(path), np.arange(inst.m)].sum().item())

    def is_feasible(self, inst: MbaInstance) -> bool:
        if len(self.path) != inst.m or not all(0 <= x < inst.n for x in self.path):
            return False
        return all((self.path[j], self.path[j + 1]) in inst.arcs[j] for j in range(inst.m - 1))


class ColumnPool:
    """Deduplicated (by path) list of columns."""

    def __init__(self, columns=()):
        self.columns: list[TupleColumn] = []
        self._seen: set[tuple[int, ...]] = set()
        for c in columns:
            self.add(c)

    def add(self, col: TupleColumn) -> bool:
        if col.path in self._seen:
            return False
        self._seen.add(col.path)
        self.columns.append(col)
        return True

    def __len__(self):
        return len(self.columns)

    def __iter__(self):
        return iter(self.columns)

    def uncovered(self, inst: MbaInstance) -> list[tuple[int, int]]:
        hit = np.zeros((inst.n, inst.m), dtype=bool)
        for c in self.columns:
            hit[list(c.path), np.arange(inst.m)] = True
        return [tuple(x) for x in np.argwhere(~hit).tolist()]


@dataclass
class DualValues:
    u: np.ndarray
    r: np.ndarray
    k_star: int


def columns_of(inst: MbaInstance, sol: MbaSolution) -> list[TupleColumn]:
    return [TupleColumn.of(inst, row) for row in sol.assign]


def _incidence(inst: MbaInstance, pool: ColumnPool) -> np.ndarray:
    m = inst.m
    inc = np.zeros((len(pool), inst.n * m))
    for p, col in enumerate(pool):
        inc[p, [i * m + j for j, i in enumerate(col.path)]] = 1.0
    return inc


def sub_lp(inst: MbaInstance, pool: ColumnPool, symmetric: bool = True) -> LinearProgram:
    """Dual of the restricted master LP.

    With ``symmetric=False`` this is the program with one constraint per
    (slot, column) pair and free slot prices ``r``. Every constraint for
    column ``p`` only sees ``min_k r_k``, so uniform ``r_k = 1/n`` is optimal;
    ``symmetric=True`` fixes that and keeps one row per column.
    """
    n, m = inst.n, inst.m
    inc = _incidence(inst, pool)
    w = np.array([c.weight for c in pool], dtype=float)
    if symmetric:
        return LinearProgram(np.ones(n * m), inc, ["<="] * len(pool), w / n)
    rows, rhs = [], []
    for k in range(n):
        for p in range(len(pool)):
            slot = np.zeros(n)
            slot[k] = -w[p]
            rows.append(np.concatenate([inc[p], slot]))
            rhs.append(0.0)
    rows.append(np.concatenate([np.zeros(n * m), np.ones(n)]))
    rhs.append(1.0)
    c = np.concatenate([np.ones(n * m), np.zeros(n)])
    return LinearProgram(c, np.array(rows), ["<="] * len(rhs), np.array(rhs))


def master_relaxation_lp(inst: MbaInstance, pool: ColumnPool) -> LinearProgram:
    """LP relaxation of the restricted master, written directly.

    Variables are ``x[k, p]`` (slot ``k`` uses column ``p``) followed by ``D``.
    """
    n, m, P = inst.n, inst.m, len(pool)
    inc = _incidence(inst, pool)
    w = np.array([c.weight for c in pool], dtype=float)
    nv = n * P + 1
    rows, senses, rhs = [], [], []
    for node in range(n * m):
        row = np.zeros(nv)
        for k in range(n):
            row[k * P:(k + 1) * P] = inc[:, node]
        rows.append(row)
        senses.append(">=")
        rhs.append(1.0)
    for k in range(n):
        row = np.zeros(nv)
        row[k * P:(k + 1) * P] = w
        row[-1] = -1.0
        rows.append(row)
        senses.append("<=")
        rhs.append(0.0)
    c = np.zeros(nv)
    c[-1] = 1.0
    return LinearProgram(c, np.array(rows), senses, np.array(rhs), sense="min")


def solve_master_lp(inst: MbaInstance, pool: ColumnPool, symmetric: bool = True,
                    rule: str = "dantzig") -> tuple[float, DualValues]:
    """Master LP value over the pool and the node/slot prices from its dual."""
    missing = pool.uncovered(inst)
    if missing:
        raise CoverageError(missing)
    lp = sub_lp(inst, pool, symmetric)
    res = lp_solve(lp, rule=rule)
    if res.status != LPStatus.OPTIMAL:
        raise RuntimeError(f"dual master LP ended {res.status.value}")
    nm = inst.n * inst.m
    u = np.clip(res.x[:nm], 0.0, None).reshape(inst.n, inst.m)
    if symmetric:
        r = np.full(inst.n, 1.0 / inst.n)
    else:
        r = np.clip(res.x[nm:], 0.0, None)
    k_star = int(np.argmin(r))
    return res.value, DualValues(u, r, k_star)


def reduced_cost(inst: MbaInstance, duals: DualValues, path) -> float:
    j = np.arange(inst.m)
    p = list(path)
    return float((duals.r[duals.k_star] * inst.weights[p, j] - duals.u[p, j]).sum())


def price(inst: MbaInstance, duals: DualValues, L: int,
          step_time_limit: float | None = None, step_node_limit: int | None = None):
    """Greedy (lookahead + post-optimization) on the modified weights.

    Returns the ``n`` columns of the resulting partition, their reduced costs
    and the smallest reduced cost.
    """
    w_hat = duals.r[duals.k_star] * inst.weights.astype(float) - duals.u
    priced = greedy_post(inst.reweighted(w_hat), L, step_time_limit, step_node_limit)
    cols = columns_of(inst, priced)
    rcs = [reduced_cost(inst, duals, c.path) for c in cols]
    return cols, rcs, min(rcs)


class _Timeout(Exception):
    pass


def _exact_cover(items, options, deadline):
    """Algorithm X over dicts of sets; ``options`` is ``{name: item list}``."""
    X = {it: set() for it in items}
    order = {it: k for k, it in enumerate(items)}
    for name, its in options.items():
        for it in its:
            X[it].add(name)
    rank = {name: k for k, name in enumerate(options)}
    steps = 0

    def select(name):
        cols = []
        for it in options[name]:
            for other in X[it]:
                for it2 in options[other]:
                    if it2 != it:
                        X[it2].discard(other)
            cols.append(X.pop(it))
        return cols

    def deselect(name, cols):
        for it in reversed(options[name]):
            X[it] = cols.pop()
            for other in X[it]:
                for it2 in options[other]:
                    if it2 != it:
                        X[it2].add(other)

    def search(partial):
        nonlocal steps
        if not X:
            return list(partial)
        steps += 1
        if deadline is not None and steps % 64 == 0 and time.perf_counter() > deadline:
            raise _Timeout
        it = min(X, key=lambda c: (len(X[c]), order[c]))
        for name in sorted(X[it], key=rank.__getitem__):
            partial.append(name)
            cols = select(name)
            found = search(partial)
            if found is not None:
                return found
            deselect(name, cols)
            partial.pop()
        return None

    return search([])


def solve_master_ip(inst: MbaInstance, pool: ColumnPool, time_limit: float | None = None,
                    upper: float | None = None) -> MbaSolution | None:
    """Restricted integer master: ``n`` pool columns that partition the nodes,
    lightest heaviest column first found by lowering a weight threshold."""
    missing = pool.uncovered(inst)
    if missing:
        raise CoverageError(missing)
    deadline = None if time_limit is None else time.perf_counter() + time_limit
    cols = sorted(pool, key=lambda c: (c.weight, c.path))
    levels = sorted({c.weight for c in cols}, reverse=True)
    if upper is not None:
        levels = [t for t in levels if t <= upper + 1e-9]
    items = [(i, j) for j in range(inst.m) for i in range(inst.n)]
    best = None
    for t in levels:
        if best is not None and t >= max(c.weight for c in best) - 1e-9:
            continue
        opts = {c.path: [(i, j) for j, i in enumerate(c.path)] for c in cols if c.weight <= t + 1e-9}
        try:
            found = _exact_cover(items, opts, deadline)
        except _Timeout:
            break
        if found is None:
            break
        best = [TupleColumn.of(inst, p) for p in found]
    if best is None:
        return None
    rows = sorted((c.path for c in best), key=lambda p: p[0])
    sol = MbaSolution.from_rows(rows)
    check_solution(inst, sol)
    return sol


@dataclass
class ColgenTrace:
    lp_values: list[float] = field(default_factory=list)
    ip_value: float | None = None
    best_reduced_costs: list[float] = field(default_factory=list)
    pre_seconds: float = 0.0
    master_seconds: float = 0.0
    columns: int = 0
    stop_reason: str = ""


def colgen_solve(inst: MbaInstance, time_limit: float = 300.0, L: int = 1,
                 start: MbaSolution | None = None, step_time_limit: float | None = None,
                 step_node_limit: int | None = None, master_time_limit: float | None = None,
                 stall_rounds: int = STALL_ROUNDS) -> tuple[SolveReport, MbaSolution]:
    """Root-node column generation followed by the restricted integer master.

    The pool is seeded with ``start`` (lookahead greedy plus post-optimization
    when absent). Pricing stops after ``stall_rounds`` rounds without a column
    of negative reduced cost, when a round yields no new column at all, or once
    ``time_limit`` has passed; a round already running is allowed to finish.
    """
    t0 = time.perf_counter()
    if step_time_limit is None and inst.m > 1:
        step_time_limit = time_limit / (inst.m - 1)
    if start is None:
        start = greedy_post(inst, L, step_time_limit, step_node_limit)
    best_sol, best_obj = start, objective(inst, start)
    pool = ColumnPool(columns_of(inst, start))
    trace = ColgenTrace()
    stale = 0
    rounds = 0
    dirty = True
    lp_value = None
    while True:
        lp_value, duals = solve_master_lp(inst, pool)
        dirty = False
        if trace.lp_values and lp_value > trace.lp_values[-1] + 1e-6:
            log.warning("master LP value rose from %g to %g", trace.lp_values[-1], lp_value)
        trace.lp_values.append(lp_value)
        if time.perf_counter() - t0 > time_limit:
            trace.stop_reason = "time limit"
            break
        cols, rcs, best_rc = price(inst, duals, L, step_time_limit, step_node_limit)
        rounds += 1
        trace.best_reduced_costs.append(best_rc)
        priced = MbaSolution.from_rows(sorted((c.path for c in cols), key=lambda p: p[0]))
        obj = objective(inst, priced)
        if obj < best_obj:
            best_sol, best_obj = priced, obj
        good = [c for c, rc in zip(cols, rcs) if rc < REDUCED_COST_TOL]
        added_good = sum(pool.add(c) for c in good)
        added_rest = sum(pool.add(c) for c in cols)
        dirty = added_good + added_rest > 0
        log.debug("round %d: lp=%.4f best rc=%.4g new=%d/%d", rounds, lp_value, best_rc,
                  added_good, added_rest)
        stale = 0 if added_good else stale + 1
        if not dirty:
            trace.stop_reason = "no new columns"
            break
        if stale >= stall_rounds:
            trace.stop_reason = f"{stall_rounds} rounds without negative reduced cost"
            break
    if dirty:
        lp_value, _ = solve_master_lp(inst, pool)
        trace.lp_values.append(lp_value)
    trace.pre_seconds = time.perf_counter() - t0
    t1 = time.perf_counter()
    if master_time_limit is None:
        master_time_limit = max(10.0, 0.25 * time_limit)
    ip = solve_master_ip(inst, pool, master_time_limit, upper=best_obj)
    trace.master_seconds = time.perf_counter() - t1
    if ip is not None:
        trace.ip_value = objective(inst, ip)
        if trace.ip_value < best_obj:
            best_sol, best_obj = ip, trace.ip_value
    trace.columns = len(pool)
    report = SolveReport(objective=best_obj, lower_bound=lp_value, status=Status.FEASIBLE,
                         runtime_seconds=time.perf_counter() - t0,
                         node_or_iteration_count=rounds,
                         extra={"trace": trace, "pricing_stop_rule": f"R={stall_rounds}"})
    return report, best_sol
