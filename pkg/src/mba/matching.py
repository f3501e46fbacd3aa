"""Bipartite matching primitives.

Both sides of a problem are indexed ``0..size-1``. Hopcroft-Karp gives
maximum matchings; the bottleneck assignment is found by binary search over
the sorted distinct pair values with a maximum-matching test per threshold.
:class:`MatchingStream` lists perfect matchings lazily in nondecreasing
bottleneck order (a Murty-style partition scheme), which the branch-and-bound
uses to enumerate children.
"""
from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from .instance import InfeasibleInstanceError

INF = math.inf


class NoPerfectMatchingError(InfeasibleInstanceError):
    pass


@dataclass
class BipartiteProblem:
    """``value`` maps each allowed ``(left, right)`` pair to a number."""

    size: int
    value: Mapping[tuple[int, int], float] = field(default_factory=dict)

    @classmethod
    def from_matrix(cls, values, allowed=None) -> "BipartiteProblem":
        n = len(values)
        if allowed is None:
            allowed = [(a, b) for a in range(n) for b in range(n)]
        return cls(n, {(a, b): values[a][b] for a, b in allowed})

    @property
    def allowed(self):
        return set(self.value)

    def adjacency(self, limit: float = INF) -> list[list[int]]:
        adj = [[] for _ in range(self.size)]
        for (a, b), v in self.value.items():
            if v <= limit:
                adj[a].append(b)
        for row in adj:
            row.sort()
        return adj


def hopcroft_karp(size: int, adj: list[list[int]], n_right: int | None = None):
    """Maximum matching; returns ``(mate_left, mate_right, cardinality)``.

    Left nodes are scanned in increasing order and each adjacency list is
    tried in the order given, so results are deterministic.
    """
    n_right = size if n_right is None else n_right
    mate_l = [-1] * size
    mate_r = [-1] * n_right
    dist = [0] * size
    card = 0

    def bfs() -> bool:
        q = deque()
        found = False
        for u in range(size):
            if mate_l[u] < 0:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = -1
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = mate_r[v]
                if w < 0:
                    found = True
                elif dist[w] < 0:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(u: int) -> bool:
        for v in adj[u]:
            w = mate_r[v]
            if w < 0 or (dist[w] == dist[u] + 1 and dfs(w)):
                mate_l[u] = v
                mate_r[v] = u
                return True
        dist[u] = -1
        return False

    while bfs():
        for u in range(size):
            if mate_l[u] < 0 and dfs(u):
                card += 1
    return mate_l, mate_r, card


def maximum_matching(problem: BipartiteProblem) -> tuple[set[tuple[int, int]], int]:
    mate_l, _, card = hopcroft_karp(problem.size, problem.adjacency())
    return {(a, b) for a, b in enumerate(mate_l) if b >= 0}, card


def _bottleneck(size: int, edges: list[tuple[float, int, int]]):
    """Binary search on distinct values; ``edges`` are ``(value, left, right)``."""
    if size == 0:
        return (), -INF
    levels = sorted({e[0] for e in edges})

    def adjacency(t):
        adj = [[] for _ in range(size)]
        for v, a, b in edges:
            if v <= t:
                adj[a].append(b)
        for row in adj:
            row.sort()
        return adj

    if not levels or hopcroft_karp(size, adjacency(levels[-1]))[2] < size:
        return None, INF
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if hopcroft_karp(size, adjacency(levels[mid]))[2] == size:
            hi = mid
        else:
            lo = mid + 1
    mate_l = hopcroft_karp(size, adjacency(levels[lo]))[0]
    return tuple(mate_l), levels[lo]


def bottleneck_assignment(problem: BipartiteProblem) -> tuple[dict[int, int], float]:
    """Perfect matching minimizing the largest pair value.

    Returns ``({left: right}, value)``; raises :class:`NoPerfectMatchingError`
    when the allowed pairs admit no perfect matching.
    """
    edges = [(v, a, b) for (a, b), v in problem.value.items()]
    mate, value = _bottleneck(problem.size, edges)
    if mate is None:
        raise NoPerfectMatchingError("no perfect matching over the allowed pairs")
    return dict(enumerate(mate)), value


class MatchingStream:
    """Perfect matchings in nondecreasing bottleneck order, produced lazily.

    ``adj[l]`` lists ``(value, right)`` pairs. Only pairs with value strictly
    below ``cap()`` are used; ``cap`` is re-read on every step so a caller
    can tighten it while iterating (branch-and-bound incumbents).

    Sub-problems of the partition are first queued with their parent's value
    (a valid lower bound) and only solved when they reach the front of the
    queue. Solving one needs a single minimax augmenting path.
    """

    def __init__(self, size: int, adj: list[list[tuple[float, int]]],
                 cap: Callable[[], float] = lambda: INF):
        self.size = size
        self.adj = adj
        self.cap = cap
        self.value = {(a, r): v for a, row in enumerate(adj) for v, r in row}
        self._seq = itertools.count()
        self._heap = []
        self.solved = 0
        limit = cap()
        edges = [(v, a, r) for a, row in enumerate(adj) for v, r in row if v < limit]
        mate, val = _bottleneck(size, edges)
        if mate is not None:
            self._push(val, 0, (mate, 0, frozenset()))

    def _push(self, key, flag, payload):
        heapq.heappush(self._heap, (key, flag, next(self._seq), payload))

    def peek_value(self) -> float:
        """Lower bound on every matching not yet produced (``inf`` if none)."""
        while self._heap:
            key = self._heap[0][0]
            if key >= self.cap():
                self._heap.clear()
                break
            return key
        return INF

    def _solve(self, mate, i, forbidden):
        size, cap = self.size, self.cap()
        r0 = mate[i]
        blocked_r = set(mate[:i])
        mate_r = {r: a for a, r in enumerate(mate)}
        best = {i: -INF}
        back = {}
        heap = [(-INF, 0, i)]
        target = None
        while heap:
            d, kind, x = heapq.heappop(heap)
            if kind == 1:
                target = (d, x)
                break
            if d > best.get(x, INF):
                continue
            for v, r in self.adj[x]:
                if v >= cap or r in blocked_r or (x, r) in forbidden:
                    continue
                nd = d if d > v else v
                if r == r0:
                    heapq.heappush(heap, (nd, 1, x))
                    continue
                y = mate_r[r]
                if nd < best.get(y, INF):
                    best[y] = nd
                    back[y] = (x, r)
                    heapq.heappush(heap, (nd, 0, y))
        if target is None:
            return None, INF
        new = list(mate)
        x = target[1]
        r = r0
        while True:
            new[x] = r
            if x == i:
                break
            prev_x, r = back[x]
            x = prev_x
        val = max(self.value[(a, b)] for a, b in enumerate(new)) if size else -INF
        return tuple(new), val

    def __iter__(self) -> Iterator[tuple[tuple[int, ...], float]]:
        return self

    def __next__(self):
        while self._heap:
            key, flag, _, payload = heapq.heappop(self._heap)
            if key >= self.cap():
                self._heap.clear()
                break
            if flag == 1:
                mate, i, forbidden = payload
                forbidden = forbidden | {(i, mate[i])}
                self.solved += 1
                new, val = self._solve(mate, i, forbidden)
                if new is not None and val < self.cap():
                    self._push(val, 0, (new, i, forbidden))
                continue
            mate, forced, forbidden = payload
            for i in range(forced, self.size):
                self._push(key, 1, (mate, i, forbidden))
            return mate, key
        raise StopIteration


def enumerate_perfect_matchings(problem: BipartiteProblem) -> Iterator[tuple[int, ...]]:
    """All perfect matchings by plain backtracking (test oracle; exponential)."""
    n = problem.size
    adj = problem.adjacency()
    used = [False] * n
    cur = [-1] * n

    def rec(a):
        if a == n:
            yield tuple(cur)
            return
        for b in adj[a]:
            if not used[b]:
                used[b] = True
                cur[a] = b
                yield from rec(a + 1)
                used[b] = False

    yield from rec(0)
