"""Exact solution by combinatorial branch-and-bound, plus a brute-force oracle.

The search fixes tuple ``k`` at element ``k`` of the first layer and extends
all tuples one layer at a time. Each child is a perfect matching between the
current tuple endpoints and the next layer, produced in nondecreasing order of
``W[k] + c[i'][j+1]`` where ``c`` is the cheapest completion from ``i'``.
The largest such value is a lower bound for every completion of the child.
"""
from __future__ import annotations

import functools
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .instance import (InfeasibleInstanceError, MbaInstance, MbaSolution,
                       SolveReport, Status, objective)
from .matching import INF, MatchingStream

BRUTE_FORCE_MAX_N = 6
BRUTE_FORCE_MAX_M = 5


class SizeGuardError(ValueError):
    pass


@dataclass
class SearchNode:
    depth: int
    weights: tuple
    frontier: tuple
    bound: float


def _completion(w, succ):
    n, m = len(w), len(w[0])
    c = [[INF] * m for _ in range(n)]
    for i in range(n):
        c[i][m - 1] = w[i][m - 1]
    for j in range(m - 2, -1, -1):
        for i in range(n):
            best = min((c[s][j + 1] for s in succ[j][i]), default=INF)
            c[i][j] = w[i][j] + best
    return c


def min_completion(inst: MbaInstance) -> np.ndarray:
    """``c[i, j]``: lightest arc-feasible path from ``(i, j)`` to the last layer."""
    return np.array(_completion(inst.weights.tolist(), inst.succ), dtype=float)


def brute_force(inst: MbaInstance) -> tuple[float, MbaSolution]:
    """Exhaustive search over per-layer permutations (memoized on the
    endpoint weight profile). Only for ``n <= 6`` and ``m <= 5``."""
    n, m = inst.n, inst.m
    if n > BRUTE_FORCE_MAX_N or m > BRUTE_FORCE_MAX_M:
        raise SizeGuardError(f"brute force refuses n={n}, m={m}")
    w = inst.weights.tolist()
    arcs = inst.arcs
    perms = list(itertools.permutations(range(n)))

    # state: layer j and the running weight of the tuple ending at each element
    @functools.lru_cache(maxsize=None)
    def best(j, profile):
        if j == m - 1:
            return max(profile), None
        out = (INF, None)
        for p in perms:
            # p[a] = element of layer j+1 following element a of layer j
            if all((a, p[a]) in arcs[j] for a in range(n)):
                nxt = [0] * n
                for a in range(n):
                    nxt[p[a]] = profile[a] + w[p[a]][j + 1]
                v = best(j + 1, tuple(nxt))[0]
                if v < out[0]:
                    out = (v, p)
        return out

    start = tuple(w[i][0] for i in range(n))
    val = best(0, start)[0]
    if val == INF:
        raise InfeasibleInstanceError("no feasible partition")
    rows = [[k] for k in range(n)]
    profile = start
    for j in range(m - 1):
        p = best(j, profile)[1]
        nxt = [0] * n
        for a in range(n):
            nxt[p[a]] = profile[a] + w[p[a]][j + 1]
        for row in rows:
            row.append(p[row[-1]])
        profile = tuple(nxt)
    sol = MbaSolution.from_rows(rows)
    return objective(inst, sol), sol


class _Search:
    """Depth-first branch-and-bound from a fixed first layer.

    Layer 0 is assigned (tuple ``k`` at ``start[k]`` with running weight
    ``run0[k]``); layers ``1..L-1`` are searched.
    """

    def __init__(self, w, succ, start, run0, integral, incumbent_value=INF,
                 incumbent_rows=None, time_limit=None, node_limit=None):
        self.w = w
        self.succ = succ
        self.n = len(start)
        self.L = len(w[0])
        self.start = tuple(start)
        self.run0 = tuple(run0)
        self.tol = 0.0 if integral else 1e-9
        self.integral = integral
        self.best = incumbent_value
        self.best_rows = incumbent_rows
        self.initial = incumbent_value
        self.deadline = None if time_limit is None else time.perf_counter() + time_limit
        self.node_limit = node_limit
        self.nodes = 0
        self.c = _completion(w, succ)

    def cap(self):
        return self.best - self.tol

    def root_bound(self) -> float:
        n, L, w, c, succ = self.n, self.L, self.w, self.c, self.succ
        b = max(self.run0)
        if L == 1:
            return b
        # cheapest path through every node, starting from the fixed roots
        f = [[INF] * L for _ in range(n)]
        for k in range(n):
            for s in succ[0][self.start[k]]:
                f[s][1] = min(f[s][1], self.run0[k] + w[s][1])
        for j in range(1, L - 1):
            for i in range(n):
                if f[i][j] < INF:
                    for s in succ[j][i]:
                        v = f[i][j] + w[s][j + 1]
                        if v < f[s][j + 1]:
                            f[s][j + 1] = v
        for j in range(1, L):
            for i in range(n):
                b = max(b, f[i][j] + c[i][j] - w[i][j])
        for k in range(n):
            b = max(b, self.run0[k] + min((c[s][1] for s in succ[0][self.start[k]]), default=INF))
        total = sum(self.run0) + sum(w[i][j] for i in range(n) for j in range(1, L))
        avg = total / n
        if self.integral:
            avg = math.ceil(avg - 1e-9)
        return max(b, avg)

    def _stream(self, node: SearchNode):
        j = node.depth
        col = self.c
        succ = self.succ[j]
        adj = []
        for k in range(self.n):
            base = node.weights[k]
            row = sorted((base + col[s][j + 1], s) for s in succ[node.frontier[k]])
            adj.append(row)
        return MatchingStream(self.n, adj, self.cap)

    def _out_of_budget(self) -> bool:
        if self.deadline is not None and time.perf_counter() > self.deadline:
            return True
        return self.node_limit is not None and self.nodes >= self.node_limit

    def run(self):
        """Returns ``(complete, lower_bound)``."""
        root_b = self.root_bound()
        if root_b == INF or self.L == 1:
            if self.L == 1 and self.run0 and max(self.run0) < self.best:
                self.best = max(self.run0)
                self.best_rows = [[s] for s in self.start]
            return True, (root_b if self.best == INF else self.best)
        if root_b >= self.cap():
            return True, self.best
        root = SearchNode(0, self.run0, self.start, root_b)
        stack = [(root, self._stream(root), None)]
        w, last = self.w, self.L - 1
        while stack:
            if self._out_of_budget():
                lb = min((max(nd.bound, st.peek_value()) for nd, st, _ in stack), default=INF)
                return False, min(lb, self.best)
            node, stream, path = stack[-1]
            nxt = next(stream, None)
            if nxt is None:
                stack.pop()
                continue
            mate, val = nxt
            self.nodes += 1
            j = node.depth + 1
            new_path = (path, mate)
            if j == last:
                # the matching value is exactly the objective at the last layer
                if val < self.cap():
                    self.best = val
                    self.best_rows = self._rows(new_path)
                continue
            weights = tuple(node.weights[k] + w[mate[k]][j] for k in range(self.n))
            child = SearchNode(j, weights, mate, max(node.bound, val))
            if child.bound >= self.cap():
                continue
            cs = self._stream(child)
            if cs.peek_value() >= self.cap():
                continue
            stack.append((child, cs, new_path))
        return True, self.best

    def _rows(self, path):
        cols = []
        while path is not None:
            path, mate = path
            cols.append(mate)
        cols.reverse()
        return [[self.start[k]] + [col[k] for col in cols] for k in range(self.n)]


def _report(search: _Search, complete: bool, lb: float, t0: float) -> SolveReport:
    if complete:
        status = Status.INFEASIBLE if search.best == INF else Status.OPTIMAL
        lb = search.best if search.best < INF else INF
    elif search.best == INF or search.best >= search.initial:
        status = Status.TIME_LIMIT
    else:
        status = Status.FEASIBLE
    obj = None if search.best == INF else search.best
    if obj is not None and search.integral:
        obj = int(round(obj))
        lb = math.ceil(lb - 1e-9) if lb < INF else lb
    return SolveReport(objective=obj, lower_bound=lb, status=status,
                       runtime_seconds=time.perf_counter() - t0,
                       node_or_iteration_count=search.nodes)


def solve_exact(inst: MbaInstance, time_limit: float | None = None,
                warm_start: MbaSolution | None = None,
                node_limit: int | None = None,
                aggregate_twins: bool = False) -> tuple[SolveReport, MbaSolution | None]:
    """Branch-and-bound over the whole instance.

    The incumbent starts from ``warm_start`` or, if absent, from the standard
    greedy. On a time or node limit the report carries the best solution and
    the smallest bound over the open part of the tree.

    ``aggregate_twins=True`` switches to the state-level search of
    :class:`_TwinSearch`, which pays off on instances with large groups of
    interchangeable nodes. Its bound on a time limit is the root bound.
    """
    t0 = time.perf_counter()
    if warm_start is None:
        from .greedy import greedy_standard
        try:
            warm_start = greedy_standard(inst)
        except InfeasibleInstanceError:
            warm_start = None
    inc_val, inc_rows = INF, None
    if warm_start is not None:
        inc_val = objective(inst, warm_start)
        inc_rows = [list(r) for r in warm_start.assign]
    w = inst.weights.tolist()
    if aggregate_twins:
        search = _TwinSearch(inst, inc_val, inc_rows, time_limit, node_limit)
    else:
        search = _Search(w, inst.succ, range(inst.n), [w[k][0] for k in range(inst.n)],
                         inst.is_integral, inc_val, inc_rows, time_limit, node_limit)
    complete, lb = search.run()
    report = _report(search, complete, lb, t0)
    sol = None if search.best_rows is None else MbaSolution.from_rows(search.best_rows)
    return report, sol


def solve_window(inst: MbaInstance, offsets, fixed_first_layer, time_limit: float | None = None,
                 node_limit: int | None = None,
                 incumbent: MbaSolution | None = None) -> tuple[SolveReport, MbaSolution | None]:
    """Same search with layer 0 fixed to ``fixed_first_layer``.

    Tuple ``k`` starts at element ``fixed_first_layer[k]`` with running weight
    ``offsets[k] + weights[fixed_first_layer[k], 0]``. The returned solution
    has tuple ``k`` in row ``k`` (so its first column is ``fixed_first_layer``).
    """
    t0 = time.perf_counter()
    w = inst.weights.tolist()
    start = [int(x) for x in fixed_first_layer]
    if sorted(start) != list(range(inst.n)):
        raise ValueError("fixed_first_layer must be a permutation")
    run0 = [offsets[k] + w[start[k]][0] for k in range(inst.n)]
    integral = inst.is_integral and all(float(o).is_integer() for o in offsets)
    if integral:
        run0 = [int(round(v)) for v in run0]
    inc_val, inc_rows = INF, None
    if incumbent is not None:
        inc_rows = [list(r) for r in incumbent.assign]
        inc_val = max(run0[k] + sum(w[r][j] for j, r in enumerate(inc_rows[k]) if j > 0)
                      for k in range(inst.n))
    search = _Search(w, inst.succ, start, run0, integral, inc_val, inc_rows,
                     time_limit, node_limit)
    complete, lb = search.run()
    report = _report(search, complete, lb, t0)
    sol = None if search.best_rows is None else MbaSolution(tuple(tuple(r) for r in search.best_rows))
    return report, sol


def _transport_feasible(supply, capacity, allowed) -> bool:
    """Can every left group ship its supply into right capacities along ``allowed``?

    Max-flow on the group graph: a greedy first pass, then breadth-first
    augmenting paths that push the path bottleneck at once.
    """
    need = sum(supply)
    if need > sum(capacity):
        return False
    left = list(supply)
    room = list(capacity)
    back: dict = {}                             # right group -> {left group: flow}
    for g, opts in enumerate(allowed):
        for h in opts:
            if not left[g]:
                break
            t = min(left[g], room[h])
            if t:
                left[g] -= t
                room[h] -= t
                back.setdefault(h, {})[g] = back.get(h, {}).get(g, 0) + t
    shipped = need - sum(left)
    while shipped < need:
        parent = {}                             # right group -> left group reaching it
        via = {g: None for g in range(len(left)) if left[g]}   # left group -> right group
        queue = list(via)
        end = None
        qi = 0
        while qi < len(queue) and end is None:
            g = queue[qi]
            qi += 1
            for h in allowed[g]:
                if h in parent:
                    continue
                parent[h] = g
                if room[h]:
                    end = h
                    break
                for g2, f in back.get(h, {}).items():
                    if f and g2 not in via:
                        via[g2] = h
                        queue.append(g2)
        if end is None:
            return False
        # walk back to a source group, collecting the bottleneck
        push = room[end]
        h = end
        while True:
            g = parent[h]
            if via[g] is None:
                push = min(push, left[g])
                break
            h = via[g]
            push = min(push, back[h][g])
        h = end
        room[end] -= push
        while True:
            g = parent[h]
            back.setdefault(h, {})[g] = back.get(h, {}).get(g, 0) + push
            if via[g] is None:
                left[g] -= push
                break
            h = via[g]
            back[h][g] -= push
        shipped += push
    return True


class _BudgetExhausted(Exception):
    pass


class _TwinSearch:
    """Search over canonical layer states instead of concrete matchings.

    The state after column ``j`` is the running weight sitting on every node of
    column ``j``. Nodes with the same successor set are interchangeable for
    the rest of the search, so a state is keyed by the sorted (class, weight)
    pairs. Transitions move whole groups of equal-weight, equal-class nodes
    into groups of next-column nodes with identical neighbourhoods and weight,
    so permutations inside such groups are never enumerated. Fully explored
    states are remembered and never expanded twice.
    """

    def __init__(self, inst: MbaInstance, incumbent_value=INF, incumbent_rows=None,
                 time_limit=None, node_limit=None):
        self.w = inst.weights.tolist()
        self.n, self.m = inst.n, inst.m
        self.succ, self.pred = inst.succ, inst.pred
        self.integral = inst.is_integral
        self.tol = 0.0 if self.integral else 1e-9
        self.c = _completion(self.w, self.succ)
        self.best, self.best_rows = incumbent_value, incumbent_rows
        self.initial = incumbent_value
        self.deadline = None if time_limit is None else time.perf_counter() + time_limit
        self.node_limit = node_limit
        self.nodes = 0
        self.steps = 0
        self.seen: set = set()
        self.fclass = []
        for j in range(self.m):
            ids: dict = {}
            row = []
            for i in range(self.n):
                key = self.succ[j][i] if j < self.m - 1 else ()
                row.append(ids.setdefault(key, len(ids)))
            self.fclass.append(row)
        self.rgroups = [None]
        for j in range(1, self.m):
            groups: dict = {}
            for i in range(self.n):
                key = (self.pred[j - 1][i], self.w[i][j], self.fclass[j][i])
                groups.setdefault(key, []).append(i)
            self.rgroups.append(list(groups.values()))

    def cap(self):
        return self.best - self.tol

    def _key(self, j, W):
        return j, tuple(sorted(zip(self.fclass[j], W)))

    def _transitions(self, j, W):
        """Yield ``(mate, W_next)`` for column ``j -> j+1``; ``mate[i]`` is the
        successor of node ``i``."""
        cap = self.cap()
        left: dict = {}
        for i in range(self.n):
            left.setdefault((self.fclass[j][i], W[i]), []).append(i)
        lgroups = list(left.values())
        rgroups = self.rgroups[j + 1]
        c = self.c
        allowed = []
        for nodes in lgroups:
            rep = nodes[0]
            succ = set(self.succ[j][rep])
            opts = []
            for h, rn in enumerate(rgroups):
                if rn[0] in succ:
                    v = W[rep] + c[rn[0]][j + 1]
                    if v < cap:
                        opts.append((v, h))
            opts.sort()
            allowed.append([h for _, h in opts])
        supply = [len(g) for g in lgroups]
        capacity = [len(r) for r in rgroups]
        if not _transport_feasible(supply, capacity, allowed):
            return
        x = [dict() for _ in lgroups]

        def place(a, pos, left_over):
            # flow enumeration can run long between yields, so it checks the clock too
            self.steps += 1
            if self.steps % 256 == 0 and self._out_of_budget():
                raise _BudgetExhausted
            if a == len(lgroups):
                yield
                return
            opts = allowed[a]
            if left_over == 0:
                yield from place(a + 1, 0, supply[a + 1] if a + 1 < len(lgroups) else 0)
                return
            if pos == len(opts):
                return
            h = opts[pos]
            rest = allowed[a + 1:]
            for amount in range(min(left_over, capacity[h]), -1, -1):
                if amount:
                    x[a][h] = amount
                    capacity[h] -= amount
                # the remainder of this group must still fit beside the later groups
                if _transport_feasible([left_over - amount] + supply[a + 1:], capacity,
                                       [opts[pos + 1:]] + rest):
                    yield from place(a, pos + 1, left_over - amount)
                if amount:
                    capacity[h] += amount
                    del x[a][h]

        for _ in place(0, 0, supply[0]):
            mate = [None] * self.n
            W2 = [None] * self.n
            used = [0] * len(rgroups)
            for a, nodes in enumerate(lgroups):
                it = iter(nodes)
                for h in sorted(x[a]):
                    for _k in range(x[a][h]):
                        i = next(it)
                        s = rgroups[h][used[h]]
                        used[h] += 1
                        mate[i] = s
                        W2[s] = W[i] + self.w[s][j + 1]
            yield mate, W2

    def _out_of_budget(self):
        if self.deadline is not None and time.perf_counter() > self.deadline:
            return True
        return self.node_limit is not None and self.nodes >= self.node_limit

    def run(self):
        W0 = [self.w[i][0] for i in range(self.n)]
        if self.m == 1:
            if max(W0) < self.best:
                self.best, self.best_rows = max(W0), [[i] for i in range(self.n)]
            return True, self.best
        root_b = max(W0[i] + self.c[i][0] - self.w[i][0] for i in range(self.n))
        if root_b >= self.cap():
            return True, self.best
        stack = [(0, W0, None, self._transitions(0, W0))]
        while stack:
            if self._out_of_budget():
                return False, min(root_b, self.best)
            j, W, path, gen = stack[-1]
            try:
                nxt = next(gen, None)
            except _BudgetExhausted:
                return False, min(root_b, self.best)
            if nxt is None:
                stack.pop()
                continue
            mate, W2 = nxt
            self.nodes += 1
            new_path = (path, mate)
            if j + 1 == self.m - 1:
                v = max(W2)
                if v < self.cap():
                    self.best = v
                    self.best_rows = self._rows(new_path)
                continue
            key = self._key(j + 1, W2)
            if key in self.seen:
                continue
            self.seen.add(key)
            stack.append((j + 1, W2, new_path, self._transitions(j + 1, W2)))
        return True, self.best

    def _rows(self, path):
        mates = []
        while path is not None:
            path, mate = path
            mates.append(mate)
        mates.reverse()
        rows = []
        for k in range(self.n):
            row = [k]
            for mate in mates:
                row.append(mate[row[-1]])
            rows.append(row)
        return rows
