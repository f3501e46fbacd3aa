"""Greedy construction, rolling-horizon lookahead and pairwise post-optimization."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

from .exact import solve_window
from .instance import (InfeasibleInstanceError, MbaInstance, MbaSolution,
                       objective, tuple_weights)
from .matching import BipartiteProblem, NoPerfectMatchingError, bottleneck_assignment

log = logging.getLogger(__name__)


@dataclass
class PartialState:
    """Tuples fixed through some layer: paths, accumulated weights, endpoints."""

    paths: list[list[int]]
    weights: list

    @property
    def frontier(self) -> list[int]:
        return [p[-1] for p in self.paths]

    @classmethod
    def rooted(cls, inst: MbaInstance) -> "PartialState":
        w = inst.weights
        return cls([[k] for k in range(inst.n)], [w[k, 0].item() for k in range(inst.n)])

    def extend(self, inst: MbaInstance, layer: int, nxt) -> None:
        for k, i in enumerate(nxt):
            self.paths[k].append(int(i))
            self.weights[k] += inst.weights[i, layer].item()

    def solution(self) -> MbaSolution:
        return MbaSolution.from_rows(self.paths)


def _greedy_step(inst: MbaInstance, state: PartialState, j: int) -> list[int]:
    w, succ = inst.weights, inst.succ[j]
    value = {}
    for k, i in enumerate(state.frontier):
        for s in succ[i]:
            value[(k, s)] = state.weights[k] + w[s, j + 1].item()
    try:
        mate, _ = bottleneck_assignment(BipartiteProblem(inst.n, value))
    except NoPerfectMatchingError:
        raise InfeasibleInstanceError(
            f"no perfect matching when extending to layer {j + 2}") from None
    return [mate[k] for k in range(inst.n)]


def greedy_standard(inst: MbaInstance) -> MbaSolution:
    """Layer-by-layer bottleneck assignment on accumulated tuple weights."""
    state = PartialState.rooted(inst)
    for j in range(inst.m - 1):
        state.extend(inst, j + 1, _greedy_step(inst, state, j))
    return state.solution()


def _window(inst: MbaInstance, first: int, last: int) -> MbaInstance:
    return MbaInstance(inst.weights[:, first:last + 1], inst.arcs[first:last])


def greedy_lookahead(inst: MbaInstance, L: int, step_time_limit: float | None = None,
                     step_node_limit: int | None = None) -> MbaSolution:
    """Rolling horizon: solve the next ``L + 1`` layers exactly, keep the first.

    Each window is a small MBA whose first layer holds the current tuple
    endpoints, with the weight accumulated so far as a per-tuple offset.
    ``L = 0`` is exactly :func:`greedy_standard`.
    """
    if L < 0:
        raise ValueError("lookahead must be nonnegative")
    if L == 0:
        return greedy_standard(inst)
    state = PartialState.rooted(inst)
    w = inst.weights
    for j in range(inst.m - 1):
        last = min(j + L + 1, inst.m - 1)
        win = _window(inst, j, last)
        frontier = state.frontier
        offsets = [state.weights[k] - w[frontier[k], j].item() for k in range(inst.n)]
        # greedy inside the window gives the search its first incumbent
        start = None
        try:
            sub = PartialState([[i] for i in frontier], list(state.weights))
            for jj in range(last - j):
                sub.extend(inst, j + jj + 1, _greedy_step(inst, sub, j + jj))
            start = MbaSolution.from_rows(sub.paths)
        except InfeasibleInstanceError:
            pass
        report, sol = solve_window(win, offsets, frontier, time_limit=step_time_limit,
                                   node_limit=step_node_limit, incumbent=start)
        if sol is None:
            raise InfeasibleInstanceError(f"lookahead window at layer {j + 1} is infeasible")
        log.debug("window %d..%d: %s in %.3fs", j + 1, last + 1, report.status.value,
                  report.runtime_seconds)
        state.extend(inst, j + 1, [row[1] for row in sol.assign])
    return state.solution()


def _recombine(inst: MbaInstance, rows: list[list[int]], j: int):
    """Best re-pairing of prefixes (layers ..j) with suffixes (layers j+1..)."""
    w = inst.weights
    n = inst.n
    pre = [sum(w[r[t], t].item() for t in range(j + 1)) for r in rows]
    suf = [sum(w[r[t], t].item() for t in range(j + 1, inst.m)) for r in rows]
    arcs = inst.arcs[j]
    starts = {}
    for l, r in enumerate(rows):
        starts.setdefault(r[j + 1], l)
    value = {}
    for k, r in enumerate(rows):
        for s in inst.succ[j][r[j]]:
            l = starts[s]
            value[(k, l)] = pre[k] + suf[l]
    mate, val = bottleneck_assignment(BipartiteProblem(n, value))
    assert all((rows[k][j], rows[mate[k]][j + 1]) in arcs for k in range(n))
    return [rows[k][:j + 1] + rows[mate[k]][j + 1:] for k in range(n)], val


def post_optimize(inst: MbaInstance, sol: MbaSolution,
                  time_limit: float | None = None) -> MbaSolution:
    """Re-match across one layer cut at a time, all other links fixed.

    A re-matching is kept only if the overall objective strictly drops;
    sweeps over all cuts repeat until one makes no change.
    """
    current = objective(inst, sol)
    tol = 0 if inst.is_integral else 1e-9
    rows = [list(r) for r in sol.assign]
    deadline = None if time_limit is None else time.perf_counter() + time_limit
    improved = True
    while improved:
        improved = False
        for j in range(inst.m - 1):
            if deadline is not None and time.perf_counter() > deadline:
                return MbaSolution.from_rows(rows)
            cand, val = _recombine(inst, rows, j)
            if val < current - tol:
                rows, current, improved = cand, val, True
    return MbaSolution.from_rows(rows)


def greedy_post(inst: MbaInstance, L: int, step_time_limit: float | None = None,
                step_node_limit: int | None = None) -> MbaSolution:
    """Lookahead greedy followed by post-optimization (the GP-L method)."""
    sol = greedy_lookahead(inst, L, step_time_limit, step_node_limit)
    return post_optimize(inst, sol)


def max_tuple_weight(inst: MbaInstance, sol: MbaSolution):
    return tuple_weights(inst, sol).max()
