"""Dense two-phase primal simplex with dual multipliers.

Problems are converted to ``max c.x, A x = b, x >= 0, b >= 0`` by shifting
bounded variables, splitting free ones, turning finite upper bounds into rows
and adding slacks.  Pivoting uses the largest reduced cost and switches to
Bland's rule after a run of degenerate pivots; the ratio test breaks ties by
the lowest basic-variable index.

The dense tableau costs ``O(rows * cols)`` memory and per-pivot work, which is
fine for the few-thousand-arc diagrams this package handles but not beyond.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
DEGENERATE_STREAK = 50

LE, EQ, GE = "<=", "==", ">="


@dataclass
class LpProblem:
    """``sense c.x`` subject to ``A[i] x rel[i] b[i]`` and ``lower <= x <= upper``."""

    c: np.ndarray
    A: np.ndarray
    rel: list[str]
    b: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    sense: str = "max"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        nv = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, nv)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.rel = list(self.rel)
        self.lower = np.zeros(nv) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(nv, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if len(self.rel) != self.A.shape[0] or self.b.size != self.A.shape[0]:
            raise ValueError("row data have inconsistent lengths")
        if any(r not in (LE, EQ, GE) for r in self.rel):
            raise ValueError(f"relations must be in {(LE, EQ, GE)}")
        if self.lower.shape != (nv,) or self.upper.shape != (nv,):
            raise ValueError("bounds must match the number of variables")
        if not np.all(np.isfinite(self.c)) or not np.all(np.isfinite(self.A)):
            raise ValueError("objective and matrix entries must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("a lower bound exceeds its upper bound")

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | iteration_limit | numerical
    objective: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    duality_gap: float = float("nan")
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class LpError(RuntimeError):
    def __init__(self, solution: LpSolution, message: str = ""):
        super().__init__(message or f"LP solve failed with status {solution.status!r}")
        self.solution = solution


def _standard_form(p: LpProblem):
    """Return ``(A, b, c, row_sign, x_map, const)`` with ``x = x_map @ [z; 1]``."""
    nv = p.num_vars
    cols = []          # column of the structural part, per std variable: (orig var, coef)
    shift = np.zeros(nv)
    extra_rows = []    # (std var index, bound) for finite ranges
    for j in range(nv):
        lo, hi = p.lower[j], p.upper[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ns = len(cols)
    T = np.zeros((nv, ns))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s
    # x = T z + shift
    A1 = p.A @ T
    b1 = p.b - p.A @ shift
    c1 = p.c @ T
    const = float(p.c @ shift)
    if p.sense == "min":
        c1 = -c1
    m0 = p.num_rows
    rows_A = [A1]
    rows_b = [b1]
    rel = list(p.rel)
    if extra_rows:
        E = np.zeros((len(extra_rows), ns))
        for r, (k, ub) in enumerate(extra_rows):
            E[r, k] = 1.0
        rows_A.append(E)
        rows_b.append(np.array([ub for _, ub in extra_rows]))
        rel += [LE] * len(extra_rows)
    A2 = np.vstack(rows_A) if rows_A else np.zeros((0, ns))
    b2 = np.concatenate(rows_b) if rows_b else np.zeros(0)
    m = A2.shape[0]
    n_slack = sum(r != EQ for r in rel)
    S = np.zeros((m, n_slack))
    k = 0
    for i, r in enumerate(rel):
        if r == LE:
            S[i, k] = 1.0
            k += 1
        elif r == GE:
            S[i, k] = -1.0
            k += 1
    A = np.hstack([A2, S])
    c = np.concatenate([c1, np.zeros(n_slack)])
    sign = np.where(b2 < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b2 * sign
    return A, b, c, sign, T, shift, const, m0


class _Tableau:
    def __init__(self, A, b, c_rows, basis):
        m, ncols = A.shape
        self.T = np.zeros((m + len(c_rows), ncols + 1))
        self.T[:m, :ncols] = A
        self.T[:m, -1] = b
        self.m = m
        self.basis = list(basis)
        # objective rows hold reduced costs r = c - c_B B^{-1} A and -z in the rhs
        for k, cr in enumerate(c_rows):
            self.T[m + k, :ncols] = cr
            self.T[m + k, :ncols] -= cr[self.basis] @ A
            self.T[m + k, -1] = -cr[self.basis] @ b

    def pivot(self, r, q):
        T = self.T
        T[r] /= T[r, q]
        col = T[:, q].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, q] = 0.0
        T[r, q] = 1.0
        self.basis[r] = q

    def run(self, obj_row, allowed, max_iter):
        """Maximize the objective row; returns (status, iterations)."""
        T, m = self.T, self.m
        it = 0
        streak = 0
        bland = False
        last = T[obj_row, -1]
        while it < max_iter:
            red = T[obj_row, :-1].copy()
            red[~allowed] = 0.0
            cand = np.nonzero(red > PIVOT_TOL)[0]
            if cand.size == 0:
                return "optimal", it
            q = int(cand[0]) if bland else int(cand[np.argmax(red[cand])])
            colq = T[:m, q]
            pos = np.nonzero(colq > PIVOT_TOL)[0]
            if pos.size == 0:
                return "unbounded", it
            # basic values drift to about -1e-13; a negative ratio would break
            # the lowest-index tie rule and let Bland's rule cycle
            ratios = np.maximum(T[pos, -1], 0.0) / colq[pos]
            best = ratios.min()
            ties = pos[ratios <= best + PIVOT_TOL * max(1.0, best)]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, q)
            it += 1
            cur = T[obj_row, -1]
            if cur < last - PIVOT_TOL:  # -z decreased: strict improvement
                streak = 0
                bland = False
            else:
                streak += 1
                if streak >= DEGENERATE_STREAK:
                    bland = True
            last = cur
        return "iteration_limit", it


def solve(p: LpProblem, max_iter: int | None = None) -> LpSolution:
    """Solve an :class:`LpProblem`; never returns a partial answer.

    ``duals[i]`` is the derivative of the optimal objective with respect to
    ``b[i]`` (so it is ``>= 0`` for ``<=`` rows of a maximization).
    """
    A, b, c, sign, T, shift, const, m0 = _standard_form(p)
    m, ns = A.shape
    if max_iter is None:
        max_iter = 50 * (m + ns) + 1000

    # start basis: slack columns with +1 where available, artificials elsewhere
    basis = [-1] * m
    for i in range(m):
        nz = np.nonzero(A[i] == 1.0)[0]
        for q in nz:
            if q >= T.shape[1] and np.count_nonzero(A[:, q]) == 1:
                basis[i] = int(q)
                break
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    Aa = np.hstack([A, np.zeros((m, n_art))])
    for k, i in enumerate(art_rows):
        Aa[i, ns + k] = 1.0
        basis[i] = ns + k
    c_phase1 = np.concatenate([np.zeros(ns), -np.ones(n_art)])
    c_phase2 = np.concatenate([c, np.zeros(n_art)])
    tab = _Tableau(Aa, b, [c_phase2, c_phase1], basis)
    allowed = np.ones(ns + n_art, dtype=bool)
    iters = 0
    if n_art:
        status, it = tab.run(m + 1, allowed, max_iter)
        iters += it
        if status != "optimal":
            return LpSolution("numerical" if status == "unbounded" else status, iterations=iters)
        # phase-1 rhs holds the remaining artificial sum
        if tab.T[m + 1, -1] > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return LpSolution("infeasible", iterations=iters)
        # drive artificials out of the basis; rows where that fails are redundant
        drop = []
        for r in range(m):
            if tab.basis[r] >= ns:
                row = tab.T[r, :ns]
                q = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
                if q.size:
                    tab.pivot(r, int(q[np.argmax(np.abs(row[q]))]))
                else:
                    drop.append(r)
        allowed[ns:] = False
        keep = [r for r in range(m) if r not in drop]
        if drop:
            tab.T = np.delete(tab.T, drop, axis=0)
            tab.basis = [tab.basis[r] for r in keep]
            tab.m = len(keep)
        obj_row = tab.m
    else:
        keep = list(range(m))
        obj_row = m
    status, it = tab.run(obj_row, allowed, max_iter - iters)
    iters += it
    if status != "optimal":
        return LpSolution(status, iterations=iters)

    # recompute primal and dual from the original data for accuracy
    basis = np.array(tab.basis)
    B = A[keep][:, basis]
    try:
        zb = np.linalg.solve(B, b[keep])
        yk = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError:
        return LpSolution("numerical", iterations=iters)
    z = np.zeros(ns)
    z[basis] = zb
    y = np.zeros(m)
    y[keep] = yk
    primal_res = max(float(np.abs(A @ z - b).max(initial=0.0)), float(max(0.0, -z.min(initial=0.0))))
    dual_res = float(max(0.0, (c - A.T @ y).max(initial=0.0)))
    z = np.maximum(z, 0.0)
    obj_std = float(c @ z)
    gap = abs(obj_std - float(b @ y))
    nstruct = T.shape[1]
    x = T @ z[:nstruct] + shift
    duals_std = y * sign
    duals = duals_std[:m0]
    objective = obj_std + const if p.sense == "max" else -obj_std + const
    if p.sense == "min":
        duals = -duals
    sol = LpSolution("optimal", objective, x, duals, iters, gap, primal_res, dual_res)
    scale = 1.0 + abs(objective)
    if primal_res > FEAS_TOL * scale or dual_res > FEAS_TOL * scale or gap > FEAS_TOL * scale:
        sol.status = "numerical"
    return sol


def maximize(c: Sequence[float], A_ub=None, b_ub=None, lower=None, upper=None) -> LpSolution:
    """Shorthand for ``max c.x, A_ub x <= b_ub, lower <= x <= upper``."""
    c = np.asarray(c, dtype=float)
    A_ub = np.zeros((0, c.size)) if A_ub is None else np.asarray(A_ub, dtype=float)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    return solve(LpProblem(c, A_ub, [LE] * len(b_ub), b_ub, lower, upper))


class PackingSimplex:
    """``max c.y, A y <= b, y >= 0`` with ``b >= 0``, columns added on the fly.

    Starts from the slack basis and keeps its tableau between calls to
    :meth:`optimize`, so adding a column costs a few pivots instead of a full
    re-solve.  Duals are read from the slack reduced costs; callers wanting
    certified numbers should finish with :func:`solve`.
    """

    def __init__(self, b: Sequence[float]):
        b = np.asarray(b, dtype=float).reshape(-1)
        if np.any(b < 0):
            raise ValueError("right-hand side must be nonnegative")
        m = b.size
        self.m = m
        self.ncols = 0
        # layout: [structural columns | slacks | rhs]; last row is the objective
        self.T = np.zeros((m + 1, m + 1))
        self.T[:m, :m] = np.eye(m)
        self.T[:m, -1] = b
        self.basis = list(range(m))  # indices into the slack block are offset below
        self._slack0 = 0
        self.iterations = 0

    def add_column(self, a: Sequence[float], cost: float) -> None:
        a = np.asarray(a, dtype=float).reshape(-1)
        m = self.m
        Binv = self.T[:m, self._slack0:self._slack0 + m]
        col = np.empty(m + 1)
        col[:m] = Binv @ a
        # reduced cost: c_j - y.a_j with y = -objective-row slack entries
        y = -self.T[m, self._slack0:self._slack0 + m]
        col[m] = cost - y @ a
        self.T = np.insert(self.T, self._slack0, col, axis=1)
        self.basis = [j if j < self._slack0 else j + 1 for j in self.basis]
        self._slack0 += 1
        self.ncols += 1

    def optimize(self, max_iter: int = 100_000) -> str:
        m, T = self.m, None
        streak, bland = 0, False
        for _ in range(max_iter):
            T = self.T
            red = T[m, :-1]
            cand = np.nonzero(red > PIVOT_TOL)[0]
            if cand.size == 0:
                return "optimal"
            q = int(cand[0]) if bland else int(cand[np.argmax(red[cand])])
            colq = T[:m, q]
            pos = np.nonzero(colq > PIVOT_TOL)[0]
            if pos.size == 0:
                return "unbounded"
            ratios = np.maximum(T[pos, -1], 0.0) / colq[pos]
            best = ratios.min()
            ties = pos[ratios <= best + PIVOT_TOL * max(1.0, best)]
            r = int(min(ties, key=lambda i: self.basis[i]))
            before = T[m, -1]
            T[r] /= T[r, q]
            col = T[:, q].copy()
            col[r] = 0.0
            T -= np.outer(col, T[r])
            T[:, q] = 0.0
            T[r, q] = 1.0
            self.basis[r] = q
            self.iterations += 1
            if T[m, -1] < before - PIVOT_TOL:
                streak, bland = 0, False
            else:
                streak += 1
                bland = bland or streak >= DEGENERATE_STREAK
        return "iteration_limit"

    @property
    def objective(self) -> float:
        return float(-self.T[self.m, -1])

    @property
    def duals(self) -> np.ndarray:
        return -self.T[self.m, self._slack0:self._slack0 + self.m].copy()

    @property
    def x(self) -> np.ndarray:
        y = np.zeros(self.ncols)
        for r, j in enumerate(self.basis):
            if j < self._slack0:
                y[j] = self.T[r, -1]
        return y
