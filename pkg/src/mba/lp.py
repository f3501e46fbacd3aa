"""Dense revised simplex (two-phase) with Bland's anti-cycling rule."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

TOL = 1e-7


class LPStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LinearProgram:
    """``sense`` is ``"max"`` or ``"min"``; rows are ``A[r] . x  senses[r]  b[r]``
    with senses from ``{"<=", ">=", "="}``. Variables flagged ``False`` in
    ``nonneg`` are free."""

    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    sense: str = "max"
    nonneg: list[bool] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(len(self.b), -1) if len(self.b) else \
            np.zeros((0, len(self.c)))
        self.b = np.asarray(self.b, dtype=float)
        nvar = len(self.c)
        if self.A.shape != (len(self.b), nvar):
            raise ValueError(f"constraint matrix is {self.A.shape}, expected {(len(self.b), nvar)}")
        if len(self.senses) != len(self.b):
            raise ValueError("one sense per row required")
        if any(s not in ("<=", ">=", "=") for s in self.senses):
            raise ValueError("senses must be <=, >= or =")
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if self.nonneg is None:
            self.nonneg = [True] * nvar
        if len(self.nonneg) != nvar:
            raise ValueError("one nonnegativity flag per variable required")


@dataclass
class LPResult:
    status: LPStatus
    value: float | None
    x: np.ndarray | None
    iterations: int = 0
    extra: dict = field(default_factory=dict)


class _Simplex:
    """min c.x  s.t.  A x = b, x >= 0, b >= 0, starting from a given basis."""

    def __init__(self, A, b, c, basis, rule):
        self.A, self.b, self.c = A, b, c
        self.basis = list(basis)
        self.rule = rule
        self.iterations = 0
        self.refactor()

    def refactor(self):
        self.Binv = np.linalg.inv(self.A[:, self.basis])
        self.xB = self.Binv @ self.b

    def run(self, allowed=None, max_iter=100000):
        A, c = self.A, self.c
        nvar = A.shape[1]
        mask = np.ones(nvar, dtype=bool) if allowed is None else allowed.copy()
        since = 0
        degenerate = 0
        while self.iterations < max_iter:
            y = c[self.basis] @ self.Binv
            d = c - y @ A
            d[self.basis] = 0.0
            cand = np.flatnonzero((d < -TOL) & mask)
            if cand.size == 0:
                return "optimal"
            if self.rule == "bland" or degenerate > 20:
                q = int(cand[0])
            else:
                q = int(cand[np.argmin(d[cand])])
            col = self.Binv @ A[:, q]
            pos = np.flatnonzero(col > TOL)
            if pos.size == 0:
                return "unbounded"
            ratios = self.xB[pos] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + TOL]
            # Bland: among tied rows leave the smallest variable index
            p = int(min(ties, key=lambda r: self.basis[r]))
            degenerate = degenerate + 1 if best <= TOL else 0
            piv = col[p]
            self.Binv[p] /= piv
            others = np.arange(len(self.basis)) != p
            self.Binv[others] -= np.outer(col[others], self.Binv[p])
            self.basis[p] = q
            self.iterations += 1
            since += 1
            if since >= 100:
                self.refactor()
                since = 0
            else:
                self.xB = self.Binv @ self.b
            np.maximum(self.xB, 0.0, out=self.xB, where=self.xB > -TOL)
        raise RuntimeError("simplex iteration limit reached")


def lp_solve(lp: LinearProgram, rule: str = "bland") -> LPResult:
    """Solve by two-phase revised simplex.

    ``rule="bland"`` uses Bland's smallest-index rule throughout; with
    ``rule="dantzig"`` the most negative reduced cost enters until a run of
    degenerate pivots, after which Bland's rule takes over.
    """
    if rule not in ("bland", "dantzig"):
        raise ValueError("rule must be 'bland' or 'dantzig'")
    nvar = len(lp.c)
    # split free variables
    cols = [lp.A[:, i] for i in range(nvar)]
    cost = list(lp.c if lp.sense == "min" else -lp.c)
    back = list(range(nvar))
    signs = [1.0] * nvar
    for i, nn in enumerate(lp.nonneg):
        if not nn:
            cols.append(-lp.A[:, i])
            cost.append(-cost[i])
            back.append(i)
            signs.append(-1.0)
    nstruct = len(cols)
    rows = len(lp.b)
    A = np.column_stack(cols) if cols else np.zeros((rows, 0))
    A = A.reshape(rows, nstruct)
    b = lp.b.copy()
    senses = list(lp.senses)
    for r in range(rows):
        if b[r] < 0:
            A[r] *= -1
            b[r] *= -1
            senses[r] = {"<=": ">=", ">=": "<=", "=": "="}[senses[r]]
    extra_cols, basis, art = [], [None] * rows, []
    ncol = nstruct
    for r, s in enumerate(senses):
        if s in ("<=", ">="):
            e = np.zeros(rows)
            e[r] = 1.0 if s == "<=" else -1.0
            extra_cols.append(e)
            if s == "<=":
                basis[r] = ncol
            ncol += 1
    for r in range(rows):
        if basis[r] is None:
            e = np.zeros(rows)
            e[r] = 1.0
            extra_cols.append(e)
            basis[r] = ncol
            art.append(ncol)
            ncol += 1
    full = np.column_stack([A] + extra_cols) if extra_cols else A
    c2 = np.zeros(ncol)
    c2[:nstruct] = cost
    iters = 0
    if rows == 0:
        if np.any(np.asarray(cost) < -TOL):
            return LPResult(LPStatus.UNBOUNDED, None, None, 0)
        return LPResult(LPStatus.OPTIMAL, 0.0, np.zeros(nvar), 0)
    if art:
        c1 = np.zeros(ncol)
        c1[art] = 1.0
        s1 = _Simplex(full, b, c1, basis, rule)
        s1.run()
        iters += s1.iterations
        if c1[s1.basis] @ s1.xB > 1e-6 * max(1.0, np.abs(b).max()):
            return LPResult(LPStatus.INFEASIBLE, None, None, iters)
        basis = s1.basis
        # drive zero-level artificials out of the basis where possible
        art_set = set(art)
        for p, v in enumerate(list(basis)):
            if v in art_set:
                row = s1.Binv[p] @ full
                for q in range(ncol):
                    if q not in art_set and q not in basis and abs(row[q]) > 1e-9:
                        basis[p] = q
                        s1.basis = basis
                        s1.refactor()
                        break
        allowed = np.ones(ncol, dtype=bool)
        allowed[art] = False
        s2 = _Simplex(full, b, c2, basis, rule)
    else:
        allowed = None
        s2 = _Simplex(full, b, c2, basis, rule)
    status = s2.run(allowed)
    iters += s2.iterations
    if status == "unbounded":
        return LPResult(LPStatus.UNBOUNDED, None, None, iters)
    z = np.zeros(ncol)
    z[s2.basis] = s2.xB
    x = np.zeros(nvar)
    for jj in range(nstruct):
        x[back[jj]] += signs[jj] * z[jj]
    value = float(lp.c @ x)
    duals = c2[s2.basis] @ s2.Binv
    return LPResult(LPStatus.OPTIMAL, value, x, iters, {"row_prices": duals})
