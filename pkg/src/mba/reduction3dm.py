"""Gap reduction from three-dimensional matching (3DM) to MBA.

A 3DM instance with ``q`` elements per side and ``p`` triples becomes an MBA
instance with ``m = 3u`` columns and 0/1 weights. YES instances admit a
solution of weight 1; for NO instances every solution weighs ``u + 1``.

Layout. The ``u`` gadget layers are counted from right to left: layer ``k``
occupies columns ``3(u - k) + t`` (``t = 1, 2, 3``, 1-based), so layer ``u``
is leftmost. Layer ``k`` holds a gadget of ``q**(k-1) * p**(u-k)`` blocks;
the weighted gadget (extra unit weights on its head triple nodes in the third
column) is layer 1, the rightmost one. Every column lists its nodes as: the
X sub-block, then each block's sub-blocks in order, then the dummy nodes.

Column contents of one block:

* ``t = 1``: Z sub-block (q), Y sub-block (d = p - q), tail T sub-block (p)
* ``t = 2`` and ``t = 3``: head T sub-block (p), tail T sub-block (p)

Between neighbouring layers the head T nodes of the left layer's third column
are wired to the Z nodes of the right layer's first column in complete
``p x p`` groups. Dummy nodes are linked to each other inside a layer and
across the layer boundary, and to the X, Y and T nodes that border them.
"""
from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

from .exact import brute_force, solve_exact
from .instance import MbaInstance, MbaSolution, Status


class Kind(str, enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"
    T_HEAD = "T-head"
    T_TAIL = "T-tail"
    DUMMY = "Dummy"


@dataclass(frozen=True)
class ThreeDmInstance:
    """Triples ``(x, y, z)`` with 1-based coordinates in ``1..q``."""

    q: int
    triples: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(tuple(int(c) for c in t) for t in self.triples))
        if self.q < 1:
            raise ValueError("q must be positive")
        if len(set(self.triples)) != len(self.triples):
            raise ValueError("duplicate triple")
        for t in self.triples:
            if len(t) != 3 or not all(1 <= c <= self.q for c in t):
                raise ValueError(f"triple {t} has a coordinate outside 1..{self.q}")

    @property
    def p(self) -> int:
        return len(self.triples)

    @property
    def d(self) -> int:
        return self.p - self.q

    def occ_y(self, y: int) -> int:
        return sum(1 for t in self.triples if t[1] == y)


def read_3dm(path) -> ThreeDmInstance:
    """``q`` on the first line, then one ``x y z`` triple per line (1-based)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split("#")[0].strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty 3DM file")
    try:
        q = int(lines[0])
        triples = [tuple(int(x) for x in ln.split()) for ln in lines[1:]]
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    return ThreeDmInstance(q, tuple(triples))


def write_3dm(tdm: ThreeDmInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{tdm.q}\n")
        for t in tdm.triples:
            fh.write(" ".join(map(str, t)) + "\n")


@dataclass(frozen=True)
class NodeMeta:
    layer: int
    t: int
    kind: Kind
    block: int | None = None    # 1-based; None for X and dummy nodes
    source: int | None = None   # element (X/Y/Z) or triple index, 1-based


@dataclass
class ReductionOutput:
    instance: MbaInstance
    meta: list[list[NodeMeta]]          # meta[column][element]
    layer_heights: list[int]            # layer_heights[k - 1]
    tdm: ThreeDmInstance
    u: int

    def column(self, k: int, t: int) -> int:
        """0-based column index of position ``t`` in layer ``k``."""
        return 3 * (self.u - k) + t - 1

    def to_json(self) -> dict:
        return {
            "format": "mba-v1-reduction-meta",
            "q": self.tdm.q, "u": self.u,
            "triples": [list(t) for t in self.tdm.triples],
            "layer_heights": self.layer_heights,
            "nodes": [[[mt.layer, mt.t, mt.kind.value, mt.block, mt.source] for mt in col]
                      for col in self.meta],
        }


def layer_height(q: int, p: int, u: int, k: int) -> int:
    return q ** (k - 1) * p ** (u - k)


def build_reduction(tdm: ThreeDmInstance, u: int) -> ReductionOutput:
    q, p, d = tdm.q, tdm.p, tdm.d
    if u < 1:
        raise ValueError("u must be >= 1")
    if d < 0:
        raise ValueError(f"need at least q triples (p={p}, q={q})")
    missing_y = [y for y in range(1, q + 1) if tdm.occ_y(y) == 0]
    if missing_y:
        raise ValueError(f"y elements {missing_y} occur in no triple; Y sub-blocks cannot be sized")
    T = tdm.triples
    heights = [layer_height(q, p, u, k) for k in range(1, u + 1)]
    per_col = [q + 2 * p * h for h in heights]          # non-dummy nodes per column
    n = sum(per_col)
    m = 3 * u
    y_nodes = [y for y in range(1, q + 1) for _ in range(tdm.occ_y(y) - 1)]

    meta: list[list[NodeMeta]] = [[] for _ in range(m)]
    X, Z, Y, TH, TT, D = {}, {}, {}, {}, {}, {}

    def add(c, mt):
        meta[c].append(mt)
        return len(meta[c]) - 1

    for k in range(1, u + 1):
        h = heights[k - 1]
        for t in (1, 2, 3):
            c = 3 * (u - k) + t - 1
            X[c] = [add(c, NodeMeta(k, t, Kind.X, None, x)) for x in range(1, q + 1)]
            for b in range(h):
                if t == 1:
                    Z[c, b] = [add(c, NodeMeta(k, t, Kind.Z, b + 1, z)) for z in range(1, q + 1)]
                    Y[c, b] = [(y, add(c, NodeMeta(k, t, Kind.Y, b + 1, y))) for y in y_nodes]
                else:
                    TH[c, b] = [add(c, NodeMeta(k, t, Kind.T_HEAD, b + 1, s + 1)) for s in range(p)]
                TT[c, b] = [add(c, NodeMeta(k, t, Kind.T_TAIL, b + 1, s + 1)) for s in range(p)]
            dummies = n - per_col[k - 1]
            D[c] = [add(c, NodeMeta(k, t, Kind.DUMMY)) for _ in range(dummies)]

    arcs = [set() for _ in range(m - 1)]

    def full(c, left, right):
        arcs[c].update(itertools.product(left, right))

    for k in range(1, u + 1):
        h = heights[k - 1]
        c1, c2, c3 = (3 * (u - k) + t for t in range(3))
        for x in range(q):
            arcs[c1].add((X[c1][x], X[c2][x]))
        for s, (x, y, z) in enumerate(T):
            arcs[c2].add((X[c2][x - 1], TT[c3, h - 1][s]))
            arcs[c2].add((TH[c2, 0][s], X[c3][x - 1]))
            for b in range(h):
                arcs[c1].add((Z[c1, b][z - 1], TH[c2, b][s]))
                for yy, node in Y[c1, b]:
                    if yy == y:
                        arcs[c1].add((node, TH[c2, b][s]))
                arcs[c1].add((TT[c1, b][s], TT[c2, b][s]))
                arcs[c2].add((TH[c2, b][s], TH[c3, b][s]))
                arcs[c2].add((TT[c2, b][s], TH[c3, b][s]))
                arcs[c2].add((TT[c2, b][s], TT[c3, b][s]))
                if b + 1 < h:
                    arcs[c2].add((TH[c2, b + 1][s], TT[c3, b][s]))
        full(c1, D[c1], D[c2])
        full(c2, D[c2], D[c3])

    # boundary between layer k + 1 (left, third column) and layer k (right, first column)
    for k in range(1, u):
        h = heights[k - 1]
        left = 3 * (u - k - 1) + 2
        right = left + 1
        group = q ** (k - 1)
        for b in range(h):
            g, jj = divmod(b, group)
            sup = g // p
            for ell in range(q):
                target = sup * q ** k + jj * q + ell
                for node in TH[left, target]:
                    arcs[left].add((node, Z[right, b][ell]))
        border_right = list(X[right])
        border_left = list(X[left])
        for b in range(h):
            border_right += [node for _, node in Y[right, b]] + TT[right, b]
        for b in range(heights[k]):
            border_left += TT[left, b]
        full(left, D[left], border_right)
        full(left, border_left, D[right])
        full(left, D[left], D[right])

    weights = [[0] * m for _ in range(n)]
    for k in range(1, u + 1):
        c1 = 3 * (u - k)
        for b in range(heights[k - 1]):
            for node in Z[c1, b]:
                weights[node][c1] = 1
    last = m - 1
    for b in range(heights[0]):
        for node in TH[last, b]:
            weights[node][last] = 1

    inst = MbaInstance(weights, [sorted(a) for a in arcs],
                       metadata={"reduction": "3dm", "q": q, "p": p, "u": u})
    return ReductionOutput(inst, meta, heights, tdm, u)


@dataclass
class CountReport:
    ok: bool
    mismatches: list[str]
    layer_totals: list[int]
    bound: int


def count_check(out: ReductionOutput) -> CountReport:
    """Recount sub-blocks, columns and layer totals against the closed forms."""
    q, p, u = out.tdm.q, out.tdm.p, out.u
    d = p - q
    bad = []
    heights = [layer_height(q, p, u, k) for k in range(1, u + 1)]
    if out.layer_heights != heights:
        bad.append(f"layer heights {out.layer_heights} != {heights}")
    nondummy = [3 * q + 6 * p * h for h in heights]
    n_expected = sum(q + 2 * p * h for h in heights)
    if out.instance.n != n_expected:
        bad.append(f"n = {out.instance.n}, expected {n_expected}")
    if out.instance.m != 3 * u or len(out.meta) != 3 * u:
        bad.append(f"m = {out.instance.m}, expected {3 * u}")
    totals = []
    for k in range(1, u + 1):
        h = heights[k - 1]
        layer_total = 0
        for t in (1, 2, 3):
            c = out.column(k, t)
            if c >= len(out.meta):
                continue
            col = out.meta[c]
            layer_total += len(col)
            if len(col) != out.instance.n:
                bad.append(f"column {c + 1} has {len(col)} nodes, n = {out.instance.n}")
            counts = Counter(mt.kind for mt in col)
            expect = {Kind.X: q, Kind.T_TAIL: p * h,
                      Kind.DUMMY: sum(q + 2 * p * hh for kk, hh in enumerate(heights, 1) if kk != k)}
            if t == 1:
                expect.update({Kind.Z: q * h, Kind.Y: d * h, Kind.T_HEAD: 0})
            else:
                expect.update({Kind.Z: 0, Kind.Y: 0, Kind.T_HEAD: p * h})
            for kind, want in expect.items():
                if counts.get(kind, 0) != want:
                    bad.append(f"layer {k} column {t}: {counts.get(kind, 0)} {kind.value} nodes, expected {want}")
            per_block = Counter((mt.kind, mt.block) for mt in col if mt.block is not None)
            for (kind, b), cnt in per_block.items():
                want = {Kind.Z: q, Kind.Y: d}.get(kind, p)
                if cnt != want:
                    bad.append(f"layer {k} column {t} block {b}: {cnt} {kind.value} nodes, expected {want}")
        nd = sum(1 for t in (1, 2, 3) if out.column(k, t) < len(out.meta)
                 for mt in out.meta[out.column(k, t)] if mt.kind != Kind.DUMMY)
        if nd != nondummy[k - 1]:
            bad.append(f"layer {k}: {nd} non-dummy nodes, expected {nondummy[k - 1]}")
        totals.append(layer_total)
    bound = u * (3 * q + 6 * p ** (u + 1))
    for k, tot in enumerate(totals, 1):
        if tot != sum(nondummy):
            bad.append(f"layer {k} total {tot} != {sum(nondummy)}")
        # equality only happens for p = 1
        if tot > bound:
            bad.append(f"layer {k} total {tot} exceeds bound {bound}")
    w = out.instance.weights
    if not set(w.ravel().tolist()) <= {0, 1}:
        bad.append("weights outside {0, 1}")
    return CountReport(not bad, bad, totals, bound)


def solve_3dm_bruteforce(tdm: ThreeDmInstance, max_q: int = 8):
    """Return ``(True, witness)`` with 1-based triple indices, or ``(False, None)``."""
    if tdm.q > max_q:
        raise ValueError(f"brute force refuses q={tdm.q} > {max_q}")
    full = set(range(1, tdm.q + 1))
    for combo in itertools.combinations(range(tdm.p), tdm.q):
        chosen = [tdm.triples[s] for s in combo]
        if all({t[a] for t in chosen} == full for a in range(3)):
            return True, [s + 1 for s in combo]
    return False, None


def triple_modes(out: ReductionOutput, sol: MbaSolution) -> dict[int, list[set]]:
    """For each layer: per block, the set of triples whose head T node in the
    second column is matched to the head T node of the same block."""
    rows = sol.assign
    modes = {}
    for k in range(1, out.u + 1):
        c2 = out.column(k, 2)
        per_block = {}
        for row in rows:
            a, b = out.meta[c2][row[c2]], out.meta[c2 + 1][row[c2 + 1]]
            if a.kind == Kind.T_HEAD:
                per_block.setdefault(a.block, set())
                if b.kind == Kind.T_HEAD and b.block == a.block:
                    per_block[a.block].add(a.source)
        modes[k] = [per_block[b] for b in sorted(per_block)]
    return modes


@dataclass
class GapVerdict:
    is_yes: bool
    expected: int
    objective: int | None
    lower_bound: float
    status: str                 # confirmed | contradiction | inconclusive | infeasible
    witness: list[int] | None = None
    solve_status: str = ""
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return self.status in ("confirmed", "inconclusive") or (
            self.status == "infeasible" and not self.is_yes)


class GapViolation(AssertionError):
    pass


def verify_gap(tdm: ThreeDmInstance, u: int, solver: str = "exact",
               time_limit: float | None = None, aggregate_twins: bool = True) -> GapVerdict:
    """Build the reduction, solve it, and compare with the 3DM answer.

    The exact solver runs with twin aggregation by default: the dummy columns
    are large groups of interchangeable nodes, and without aggregation the
    branch-and-bound enumerates their permutations one by one.

    Raises :class:`GapViolation` when a proven optimum disagrees with the
    expected value; a timeout yields an ``inconclusive`` verdict instead.
    """
    is_yes, witness = solve_3dm_bruteforce(tdm)
    expected = 1 if is_yes else u + 1
    out = build_reduction(tdm, u)
    if solver == "brute":
        from .instance import InfeasibleInstanceError
        try:
            obj, _ = brute_force(out.instance)
        except InfeasibleInstanceError:
            return GapVerdict(is_yes, expected, None, math.inf, "infeasible", witness, "Infeasible")
        status = "confirmed" if obj == expected else "contradiction"
        verdict = GapVerdict(is_yes, expected, int(obj), obj, status, witness, "Optimal")
    elif solver == "exact":
        report, _ = solve_exact(out.instance, time_limit=time_limit,
                                aggregate_twins=aggregate_twins)
        if report.status == Status.OPTIMAL:
            status = "confirmed" if report.objective == expected else "contradiction"
        elif report.status == Status.INFEASIBLE:
            status = "infeasible"
        else:
            status = "inconclusive"
        verdict = GapVerdict(is_yes, expected, report.objective, report.lower_bound, status,
                             witness, report.status.value, report.runtime_seconds,
                             {"nodes": report.node_or_iteration_count, "n": out.instance.n,
                              "m": out.instance.m})
        if status == "inconclusive" and report.objective is not None:
            # a proven bound or incumbent can still contradict the claim
            if (is_yes and report.lower_bound > 1) or (not is_yes and report.objective < expected):
                verdict.status = "contradiction"
    else:
        raise ValueError("solver must be 'exact' or 'brute'")
    if verdict.status == "contradiction" or (verdict.status == "infeasible" and is_yes):
        raise GapViolation(f"gap check failed: {verdict}")
    return verdict
