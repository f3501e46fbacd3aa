"""Instances and solutions of the multi-level bottleneck assignment problem.

An instance has ``m`` layers of ``n`` weighted elements each, plus one arc set
between every pair of consecutive layers. A solution partitions the elements
into ``n`` arc-feasible tuples (one element per layer); its objective is the
largest tuple weight.

Indices are 0-based in memory and 1-based in files.
"""
from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

FORMAT = "mba-v1"
GENERATOR_VERSION = "pcg64-reject-1"


class ParseError(ValueError):
    """Raised for files that do not follow the ``mba-v1`` schema."""


class InstanceValidationError(ValueError):
    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid instance: " + "; ".join(self.violations))


class InfeasibleSolutionError(ValueError):
    """A solution breaks a permutation or arc constraint."""


class InfeasibleInstanceError(RuntimeError):
    """No feasible partition (or no perfect matching at some step) exists."""


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    TIME_LIMIT = "TimeLimit"
    INFEASIBLE = "Infeasible"


class MbaInstance:
    """Weight table plus per-layer arc sets of an ``n`` by ``m`` layered graph.

    ``weights[i, j]`` is the weight of element ``i`` in layer ``j`` and
    ``arcs[j]`` holds the allowed pairs ``(i, i2)`` between layer ``j`` and
    layer ``j + 1``. Instances are treated as immutable; the weight array is
    marked read-only.
    """

    def __init__(self, weights, arcs: Sequence[Iterable[tuple[int, int]]],
                 metadata: dict | None = None):
        w = np.array(weights)
        if w.ndim != 2:
            raise ValueError("weights must be a 2-d table")
        if w.dtype.kind not in "iuf":
            raise ValueError("weights must be numeric")
        if w.dtype.kind in "iu":
            w = w.astype(np.int64)
        else:
            w = w.astype(np.float64)
        w.setflags(write=False)
        self.weights = w
        self.n, self.m = w.shape
        if len(arcs) != max(self.m - 1, 0):
            raise ValueError(f"expected {max(self.m - 1, 0)} arc sets, got {len(arcs)}")
        # keep the raw list so validate() can see duplicates
        self._raw_arcs = [[(int(a), int(b)) for a, b in layer] for layer in arcs]
        self.arcs = tuple(frozenset(layer) for layer in self._raw_arcs)
        self.metadata = dict(metadata or {})
        self._succ = None
        self._pred = None

    @property
    def is_integral(self) -> bool:
        return self.weights.dtype.kind in "iu"

    @property
    def succ(self) -> list[list[tuple[int, ...]]]:
        """``succ[j][i]``: sorted successors of element ``i`` of layer ``j``."""
        if self._succ is None:
            succ = []
            for j, layer in enumerate(self.arcs):
                rows = [[] for _ in range(self.n)]
                for a, b in layer:
                    if 0 <= a < self.n and 0 <= b < self.n:
                        rows[a].append(b)
                succ.append([tuple(sorted(r)) for r in rows])
            self._succ = succ
        return self._succ

    @property
    def pred(self) -> list[list[tuple[int, ...]]]:
        """``pred[j][i2]``: sorted predecessors in layer ``j`` of element ``i2`` of layer ``j + 1``."""
        if self._pred is None:
            pred = []
            for layer in self.arcs:
                rows = [[] for _ in range(self.n)]
                for a, b in layer:
                    if 0 <= a < self.n and 0 <= b < self.n:
                        rows[b].append(a)
                pred.append([tuple(sorted(r)) for r in rows])
            self._pred = pred
        return self._pred

    def reweighted(self, weights) -> "MbaInstance":
        """Same graph, different weights (used by pricing, which needs negative values)."""
        w = np.asarray(weights)
        if w.shape != self.weights.shape:
            raise ValueError("weight table shape mismatch")
        out = MbaInstance.__new__(MbaInstance)
        out.__dict__.update(self.__dict__)
        w = w.astype(np.int64 if w.dtype.kind in "iu" else np.float64)
        w.setflags(write=False)
        out.weights = w
        out.metadata = {}
        return out

    def __eq__(self, other):
        if not isinstance(other, MbaInstance):
            return NotImplemented
        return (self.n == other.n and self.m == other.m
                and np.array_equal(self.weights, other.weights)
                and self.arcs == other.arcs)

    def __repr__(self):
        sizes = [len(a) for a in self.arcs]
        return f"MbaInstance(n={self.n}, m={self.m}, arcs per layer={sizes})"


@dataclass(frozen=True)
class MbaSolution:
    """``assign[k][j]`` is the element of layer ``j`` used by tuple ``k``."""

    assign: tuple[tuple[int, ...], ...]

    @classmethod
    def from_rows(cls, rows) -> "MbaSolution":
        return cls(tuple(tuple(int(x) for x in row) for row in rows))

    @classmethod
    def from_layers(cls, layers: Sequence[Sequence[int]]) -> "MbaSolution":
        """Build from per-layer columns: ``layers[j][k]`` is tuple ``k``'s element."""
        return cls(tuple(zip(*[tuple(int(x) for x in col) for col in layers])))

    @property
    def n(self) -> int:
        return len(self.assign)

    @property
    def m(self) -> int:
        return len(self.assign[0]) if self.assign else 0

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(row[j] for row in self.assign)


@dataclass
class SolveReport:
    objective: float | None
    lower_bound: float
    status: Status
    runtime_seconds: float
    node_or_iteration_count: int
    extra: dict = field(default_factory=dict)


def validate(inst: MbaInstance) -> list[str]:
    """Return the list of invariant violations; an empty list means ok."""
    out = []
    if inst.n < 1:
        out.append("n must be >= 1")
    if inst.m < 1:
        out.append("m must be >= 1")
    for i in range(inst.n):
        for j in range(inst.m):
            v = inst.weights[i, j]
            if v < 0:
                out.append(f"negative weight {v} at ({i + 1},{j + 1})")
            elif not float(v).is_integer():
                out.append(f"non-integer weight {v} at ({i + 1},{j + 1})")
    for j, layer in enumerate(inst._raw_arcs):
        seen = set()
        for a, b in layer:
            if not (0 <= a < inst.n and 0 <= b < inst.n):
                out.append(f"endpoint out of range: arc ({a + 1},{b + 1}) in layer {j + 1}")
            if (a, b) in seen:
                out.append(f"duplicate arc ({a + 1},{b + 1}) in layer {j + 1}")
            seen.add((a, b))
    return out


def check_solution(inst: MbaInstance, sol: MbaSolution) -> None:
    """Raise :class:`InfeasibleSolutionError` naming the first violated constraint."""
    if sol.n != inst.n or any(len(row) != inst.m for row in sol.assign):
        raise InfeasibleSolutionError(f"solution shape does not match n={inst.n}, m={inst.m}")
    for j in range(inst.m):
        col = sol.column(j)
        if sorted(col) != list(range(inst.n)):
            dup = next((x for x in col if col.count(x) > 1), None)
            raise InfeasibleSolutionError(
                f"layer {j + 1} is not a permutation (element {dup if dup is None else dup + 1})")
    for k, row in enumerate(sol.assign):
        for j in range(inst.m - 1):
            if (row[j], row[j + 1]) not in inst.arcs[j]:
                raise InfeasibleSolutionError(
                    f"tuple {k + 1} uses missing arc ({row[j] + 1},{row[j + 1] + 1}) in layer {j + 1}")


def tuple_weights(inst: MbaInstance, sol: MbaSolution) -> np.ndarray:
    a = np.asarray(sol.assign)
    return inst.weights[a, np.arange(inst.m)].sum(axis=1)


def objective(inst: MbaInstance, sol: MbaSolution):
    """Largest tuple weight of a feasible solution."""
    check_solution(inst, sol)
    v = tuple_weights(inst, sol).max()
    return int(v) if inst.is_integral else float(v)


def identity_solution(inst: MbaInstance) -> MbaSolution:
    return MbaSolution(tuple(tuple([k] * inst.m) for k in range(inst.n)))


# -- random instances --------------------------------------------------------

class _UniformSource:
    """Uniform integers from the raw 64-bit PCG64 stream.

    ``numpy.random.Generator`` methods are not guaranteed stable across numpy
    releases, but the raw PCG64 stream is, so sampling is done here by
    rejection to keep instances reproducible.
    """

    def __init__(self, seed: int):
        self._bits = np.random.PCG64(int(seed) & (2**64 - 1))

    def below(self, k: int) -> int:
        limit = 2**64 - (2**64 % k)
        while True:
            r = int(self._bits.random_raw())
            if r < limit:
                return r % k


def generate_random(n: int, m: int, d: float, seed: int, max_weight: int = 100) -> MbaInstance:
    """Random instance: uniform weights in ``1..max_weight``, all horizontal
    arcs, then ``floor(d * n)`` random layer-by-layer walks whose arcs are added."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if d < 0 or max_weight < 1:
        raise ValueError("d must be >= 0 and max_weight >= 1")
    rng = _UniformSource(seed)
    weights = [[1 + rng.below(max_weight) for _ in range(m)] for _ in range(n)]
    arcs = [{(i, i) for i in range(n)} for _ in range(m - 1)]
    for _ in range(math.floor(d * n)):
        walk = [rng.below(n) for _ in range(m)]
        for j in range(m - 1):
            arcs[j].add((walk[j], walk[j + 1]))
    meta = {"seed": int(seed), "d": d, "max_weight": max_weight,
            "generator_version": GENERATOR_VERSION}
    return MbaInstance(weights, [sorted(a) for a in arcs], metadata=meta)


# -- files -------------------------------------------------------------------

def _dump(x) -> str:
    return json.dumps(x, separators=(", ", ": "))


def instance_to_text(inst: MbaInstance) -> str:
    w = [[int(v) if inst.is_integral else float(v) for v in row] for row in inst.weights]
    lines = ["{", f'  "format": "{FORMAT}",', f'  "n": {inst.n},', f'  "m": {inst.m},',
             '  "weights": [']
    lines += [f"    {_dump(row)}{',' if i < inst.n - 1 else ''}" for i, row in enumerate(w)]
    lines.append("  ],")
    lines.append('  "arcs": [')
    for j, layer in enumerate(inst._raw_arcs):
        pairs = [[a + 1, b + 1] for a, b in sorted(layer)]
        lines.append(f"    {_dump(pairs)}{',' if j < len(inst.arcs) - 1 else ''}")
    lines.append("  ],")
    lines.append(f'  "metadata": {json.dumps(inst.metadata, sort_keys=True)}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _field(doc: dict, name: str, kind, path: str):
    if name not in doc:
        raise ParseError(f"{path}: missing field {name!r}")
    val = doc[name]
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ParseError(f"{path}: field {name!r} has wrong type {type(val).__name__}")
    return val


def instance_from_text(text: str, path: str = "<string>") -> MbaInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    if doc.get("format") != FORMAT:
        raise ParseError(f"{path}: unsupported format {doc.get('format')!r}")
    n = _field(doc, "n", int, path)
    m = _field(doc, "m", int, path)
    weights = _field(doc, "weights", list, path)
    arcs = _field(doc, "arcs", list, path)
    if len(weights) != n or any(not isinstance(r, list) or len(r) != m for r in weights):
        raise ParseError(f"{path}: 'weights' must be {n} rows of {m} numbers")
    for r, row in enumerate(weights):
        for c, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ParseError(f"{path}: weights[{r}][{c}] is not a number")
    if len(arcs) != max(m - 1, 0):
        raise ParseError(f"{path}: 'arcs' must hold {max(m - 1, 0)} layers")
    parsed = []
    for j, layer in enumerate(arcs):
        if not isinstance(layer, list):
            raise ParseError(f"{path}: arcs[{j}] must be a list")
        pairs = []
        for e, pair in enumerate(layer):
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(x, int) and not isinstance(x, bool) for x in pair)):
                raise ParseError(f"{path}: arcs[{j}][{e}] must be a pair of integers")
            pairs.append((pair[0] - 1, pair[1] - 1))
        parsed.append(pairs)
    meta = doc.get("metadata") or {}
    if not isinstance(meta, dict):
        raise ParseError(f"{path}: 'metadata' must be an object")
    inst = MbaInstance(weights, parsed, metadata=meta)
    problems = validate(inst)
    if problems:
        raise InstanceValidationError(problems)
    return inst


def write_instance(inst: MbaInstance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(instance_to_text(inst))


def read_instance(path) -> MbaInstance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_text(fh.read(), os.fspath(path))


def write_solution(inst: MbaInstance, sol: MbaSolution, path) -> None:
    obj = objective(inst, sol)
    lines = ["{", f'  "format": "{FORMAT}",', '  "kind": "solution",',
             f'  "n": {inst.n},', f'  "m": {inst.m},', f'  "objective": {_dump(obj)},',
             '  "assign": [']
    rows = [[x + 1 for x in row] for row in sol.assign]
    lines += [f"    {_dump(r)}{',' if k < len(rows) - 1 else ''}" for k, r in enumerate(rows)]
    lines += ["  ]", "}"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_solution(path) -> tuple[MbaSolution, float]:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ParseError(f"{path}: not an {FORMAT} document")
    rows = _field(doc, "assign", list, str(path))
    obj = _field(doc, "objective", (int, float), str(path))
    return MbaSolution.from_rows([[x - 1 for x in r] for r in rows]), obj
