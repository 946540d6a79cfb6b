"""Disjunctive slacks and sequential lifting of valid inequalities over a BDD."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bdd import Bdd, arc_lengths, potentials, require_nonempty

ZERO_TOL = 1e-9

MINUS, ZERO, PLUS = -1, 0, 1


@dataclass(frozen=True, eq=False)
class Inequality:
    """``pi . x <= pi0``."""

    pi: np.ndarray
    pi0: float

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float).reshape(-1)
        if not np.all(np.isfinite(pi)) or not np.isfinite(self.pi0):
            raise ValueError("inequality entries must be finite")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "pi0", float(self.pi0))

    @property
    def n(self) -> int:
        return self.pi.size

    def lhs(self, x) -> np.ndarray | float:
        return np.asarray(x, dtype=float) @ self.pi

    def violation(self, x) -> np.ndarray | float:
        """Positive where the inequality is violated."""
        return self.lhs(x) - self.pi0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Inequality):
            return NotImplemented
        return self.pi0 == other.pi0 and np.array_equal(self.pi, other.pi)

    def __repr__(self) -> str:
        return f"Inequality(pi={self.pi.tolist()}, pi0={self.pi0})"


@dataclass(frozen=True)
class DSlacks:
    """Conditional maxima of ``pi . x`` over the BDD with ``x_i`` fixed.

    ``lambda0[i]`` (resp. ``lambda1[i]``) is ``-inf`` when no path has
    ``x_i = 0`` (resp. 1); such indices are ``fixed`` and their ``lam`` is
    set to 0.
    """

    lambda0: np.ndarray
    lambda1: np.ndarray
    lam: np.ndarray
    fixed: np.ndarray
    tag: np.ndarray  # MINUS, ZERO or PLUS per index
    best: float

    @property
    def minus(self) -> list[int]:
        return np.nonzero(self.tag == MINUS)[0].tolist()

    @property
    def zero(self) -> list[int]:
        return np.nonzero(self.tag == ZERO)[0].tolist()

    @property
    def plus(self) -> list[int]:
        return np.nonzero(self.tag == PLUS)[0].tolist()

    def is_zero(self) -> bool:
        return bool(np.all((self.tag == ZERO) | self.fixed))


@dataclass
class LiftStep:
    index: int
    lam: float
    result: Inequality


@dataclass
class LiftReport:
    steps: list[LiftStep] = field(default_factory=list)
    reason: str = ""
    skipped: list[int] = field(default_factory=list)  # fixed indices never lifted

    @property
    def changed(self) -> bool:
        return bool(self.steps)


def _zero_tol(pi0: float) -> float:
    return ZERO_TOL * max(1.0, abs(pi0))


def tighten_rhs(bdd: Bdd, ineq: Inequality) -> Inequality:
    """Same coefficients with ``pi0`` set to the maximum of ``pi . x`` over the BDD."""
    require_nonempty(bdd)
    pots = potentials(bdd, ineq.pi)
    return Inequality(ineq.pi, float(pots.down[bdd.terminal]))


def d_slacks(bdd: Bdd, ineq: Inequality) -> DSlacks:
    """Disjunctive slacks from one top-down and one bottom-up longest-path pass."""
    require_nonempty(bdd)
    if ineq.n != bdd.n:
        raise ValueError(f"inequality has {ineq.n} coefficients, BDD has {bdd.n} variables")
    pots = potentials(bdd, ineq.pi)
    theta = arc_lengths(bdd, pots, ineq.pi)
    lam = np.full((2, bdd.n), -np.inf)
    np.maximum.at(lam, (bdd.arc_val, bdd.arc_layer), theta)
    l0, l1 = lam
    fixed = np.isneginf(l0) | np.isneginf(l1)
    diff = np.zeros(bdd.n)
    diff[~fixed] = l0[~fixed] - l1[~fixed]
    tol = _zero_tol(ineq.pi0)
    tag = np.where(diff > tol, PLUS, np.where(diff < -tol, MINUS, ZERO))
    tag[fixed] = ZERO
    return DSlacks(l0, l1, diff, fixed, tag.astype(np.int64), float(pots.down[bdd.terminal]))


def lift_step(ineq: Inequality, i: int, slacks: DSlacks) -> Inequality:
    """Move index ``i`` into the zero-slack set by adding ``lambda_i`` to ``pi_i``."""
    if slacks.fixed[i]:
        raise ValueError(f"index {i} is fixed in the BDD and cannot be lifted")
    lam = float(slacks.lam[i])
    if abs(lam) <= _zero_tol(ineq.pi0):
        raise ValueError(f"slack of index {i} is zero")
    pi = ineq.pi.copy()
    pi[i] += lam
    pi0 = ineq.pi0 if lam > 0 else ineq.pi0 + lam
    return Inequality(pi, pi0)


def min_abs_rule(slacks: DSlacks) -> int:
    """Smallest nonzero ``|lambda_i|``; lowest index on ties."""
    cand = np.nonzero((slacks.tag != ZERO) & ~slacks.fixed)[0]
    mags = np.abs(slacks.lam[cand])
    return int(cand[np.argmin(mags)])


def sequential_lift(bdd: Bdd, ineq: Inequality,
                    rule: Callable[[DSlacks], int] = min_abs_rule,
                    max_steps: int | None = None) -> tuple[Inequality, LiftReport]:
    """Lift until every non-fixed slack is zero.

    ``ineq`` should support the BDD (see :func:`tighten_rhs`).
    """
    report = LiftReport()
    cur = ineq
    limit = bdd.n if max_steps is None else max_steps
    while True:
        sl = d_slacks(bdd, cur)
        if sl.is_zero():
            report.reason = "zero-slacks"
            break
        if len(report.steps) >= limit:
            report.reason = "step-limit"
            break
        i = rule(sl)
        cur = lift_step(cur, i, sl)
        report.steps.append(LiftStep(i, float(sl.lam[i]), cur))
    report.skipped = np.nonzero(sl.fixed)[0].tolist()
    return cur, report


def tight_points(points: np.ndarray, ineq: Inequality, tol: float = 1e-9) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, ineq.n)
    return pts[np.abs(pts @ ineq.pi - ineq.pi0) <= tol * max(1.0, abs(ineq.pi0))]


def face_dimension(points: Iterable[Sequence[float]] | np.ndarray, tol: float = 1e-8) -> int:
    """Dimension of the affine hull of a finite point set (-1 when empty)."""
    pts = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=float)
    if pts.size == 0:
        return -1
    pts = pts.reshape(pts.shape[0], -1)
    if pts.shape[0] == 1:
        return 0
    return int(np.linalg.matrix_rank(pts[1:] - pts[0], tol=tol))
