"""Separation of fractional points with flow models over a BDD.

Two models send one unit of flow from root to terminal with arc capacities
tied to the point ``x``:

* joint: all 1-arcs of layer ``i`` share capacity ``x_i`` and all 0-arcs
  share ``1 - x_i``.  Solved as an LP (path formulation by default); the
  capacity-row duals ``(nu, eta)`` give the cut ``nu.x + eta.(1 - x) >= 1``.
* per-arc: each 1-arc of layer ``i`` has capacity ``x_i`` and each 0-arc
  ``1 - x_i``.  Solved combinatorially; a minimum cut gives the cut with
  ``nu_i`` (``eta_i``) the number of cut 1-arcs (0-arcs) in layer ``i``.

The joint model is never larger than the per-arc one and equals 1 exactly on
the convex hull of the BDD's points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .bdd import Bdd, require_nonempty
from .lifting import Inequality
from .lp import EQ, LE, LpError, LpProblem, LpSolution, PackingSimplex, solve

EMIT_TOL = 1e-6


@dataclass(frozen=True)
class CglpCut:
    """``nu . x + eta . (1 - x) >= 1`` from the joint model's duals."""

    nu: np.ndarray
    eta: np.ndarray
    value: float  # flow value at the separated point

    family = "cglp"

    def lhs(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        return x @ self.nu + (1.0 - x) @ self.eta

    def violation(self, x) -> np.ndarray | float:
        return 1.0 - self.lhs(x)


@dataclass(frozen=True)
class MinCutCut:
    """Minimum arc cut ``alpha`` and its layer-aggregated inequality."""

    alpha: np.ndarray  # 0/1 per arc of the BDD
    coef1: np.ndarray
    coef0: np.ndarray
    value: float

    family = "flow"

    @property
    def nu(self) -> np.ndarray:
        return self.coef1

    @property
    def eta(self) -> np.ndarray:
        return self.coef0

    def lhs(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        return x @ self.coef1 + (1.0 - x) @ self.coef0

    def violation(self, x) -> np.ndarray | float:
        return 1.0 - self.lhs(x)


@dataclass(frozen=True)
class JointFlow:
    value: float
    flow: np.ndarray
    nu: np.ndarray
    eta: np.ndarray
    lp: LpSolution


@dataclass(frozen=True)
class CapFlow:
    value: float
    flow: np.ndarray
    source_side: np.ndarray
    cut_arcs: np.ndarray  # arc indices crossing the minimum cut


def _check_point(bdd: Bdd, x) -> np.ndarray:
    require_nonempty(bdd)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (bdd.n,):
        raise ValueError(f"point has dimension {x.size}, BDD has {bdd.n} variables")
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise ValueError("point must lie in [0, 1]^n")
    return np.clip(x, 0.0, 1.0)


def arc_capacities(bdd: Bdd, x) -> np.ndarray:
    xl = x[bdd.arc_layer]
    return np.where(bdd.arc_val == 1, xl, 1.0 - xl)


def joint_flow_problem(bdd: Bdd, x) -> LpProblem:
    """Rows: balance per internal node, then 1-caps and 0-caps per layer."""
    x = _check_point(bdd, x)
    na, n = bdd.num_arcs, bdd.n
    inner = np.arange(1, bdd.num_nodes - 1)
    A = np.zeros((inner.size + 2 * n, na))
    arcs = np.arange(na)
    # balance: inflow - outflow = 0 for nodes 1..N-2 (row = node - 1)
    into = bdd.arc_dst < bdd.terminal
    A[bdd.arc_dst[into] - 1, arcs[into]] += 1.0
    out = bdd.arc_src > bdd.root
    A[bdd.arc_src[out] - 1, arcs[out]] -= 1.0
    cap_row = inner.size + bdd.arc_layer + n * (1 - bdd.arc_val)
    A[cap_row, arcs] = 1.0
    b = np.concatenate([np.zeros(inner.size), x, 1.0 - x])
    c = (bdd.arc_src == bdd.root).astype(float)
    rel = [EQ] * inner.size + [LE] * (2 * n)
    return LpProblem(c, A, rel, b, sense="max")


def _best_path(bdd: Bdd, w: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximum-weight r-t path as ``(value, arc indices)``."""
    down, up = kernels.longest_paths(bdd.num_nodes, bdd.arc_src, bdd.arc_dst, w,
                                     bdd.root, bdd.terminal)
    # arc id of children[u, v] in the row-major arc numbering
    arc_id = np.cumsum((bdd.children >= 0).ravel()) - 1
    kids = bdd.children
    path = np.empty(bdd.n, dtype=np.int64)
    u = bdd.root
    for i in range(bdd.n):
        best, pick = -np.inf, -1
        for v in (0, 1):
            c = kids[u, v]
            if c >= 0:
                a = arc_id[2 * u + v]
                val = w[a] + up[c]
                if val > best:
                    best, pick = val, a
        path[i] = pick
        u = bdd.arc_dst[pick]
    return float(down[bdd.terminal]), path


class PathPool:
    """Reusable path columns for one BDD.

    Columns do not depend on the separated point, so keeping them between
    calls lets later solves start from an almost complete master problem.
    Columns that carried no flow for ``max_idle`` solves are dropped.
    """

    def __init__(self, bdd: Bdd, max_idle: int = 50):
        self.bdd = bdd
        self.max_idle = max_idle
        self.paths: list[np.ndarray] = []
        self.cols = np.zeros((2 * bdd.n, 0))
        self._keys: dict[bytes, int] = {}
        self._idle: list[int] = []

    def __len__(self) -> int:
        return len(self.paths)

    def add(self, path: np.ndarray) -> bool:
        key = path.tobytes()
        if key in self._keys:
            return False
        n = self.bdd.n
        col = np.zeros((2 * n, 1))
        col[np.arange(n) + n * (1 - self.bdd.arc_val[path]), 0] = 1.0
        self._keys[key] = len(self.paths)
        self.paths.append(path)
        self._idle.append(0)
        self.cols = np.hstack([self.cols, col])
        return True

    def age(self, flow: np.ndarray) -> None:
        """Update idle counters after a solve and evict stale columns."""
        for j, f in enumerate(flow):
            self._idle[j] = 0 if f > 1e-12 else self._idle[j] + 1
        keep = [j for j, k in enumerate(self._idle) if k <= self.max_idle]
        if len(keep) < len(self.paths):
            self.paths = [self.paths[j] for j in keep]
            self._idle = [self._idle[j] for j in keep]
            self.cols = self.cols[:, keep]
            self._keys = {p.tobytes(): j for j, p in enumerate(self.paths)}


def maxflow_joint(bdd: Bdd, x, method: str = "paths", pool: PathPool | None = None,
                  max_columns: int = 100_000) -> JointFlow:
    """Joint-capacity max flow and the duals of the capacity rows.

    ``method="arcs"`` solves the arc formulation directly.  The default
    ``"paths"`` solves the equivalent path formulation by column generation:
    its rows are only the ``2n`` capacity rows, and pricing is a longest-path
    pass with arc weights ``-nu_i`` (1-arcs) and ``-eta_i`` (0-arcs).  At
    termination no path has positive reduced cost, so the duals satisfy
    ``nu.x + eta.(1 - x) >= 1`` on every BDD point up to ``1e-9``.
    Pass a :class:`PathPool` to reuse columns across calls on the same BDD.
    """
    if method == "arcs":
        return _maxflow_joint_arcs(bdd, x)
    if method != "paths":
        raise ValueError(f"unknown method {method!r}")
    x = _check_point(bdd, x)
    if pool is None:
        pool = PathPool(bdd)
    elif pool.bdd is not bdd:
        raise ValueError("the path pool belongs to another BDD")
    n = bdd.n
    rhs = np.concatenate([x, 1.0 - x])
    pool.add(_best_path(bdd, arc_capacities(bdd, x))[1])
    master = PackingSimplex(rhs)
    for k in range(len(pool)):
        master.add_column(pool.cols[:, k], 1.0)

    def price(duals):
        nu, eta = duals[:n], duals[n:]
        w = -np.where(bdd.arc_val == 1, nu[bdd.arc_layer], eta[bdd.arc_layer])
        best, path = _best_path(bdd, w)
        if 1.0 + best <= 1e-9 or len(pool) >= max_columns or not pool.add(path):
            return False
        master.add_column(pool.cols[:, -1], 1.0)
        return True

    while True:
        status = master.optimize()
        if status != "optimal":
            raise LpError(LpSolution(status), f"joint max-flow master ended with status {status!r}")
        if price(np.maximum(master.duals, 0.0)):
            continue
        # certify with a full solve of the final master
        sol = solve(LpProblem(np.ones(len(pool)), pool.cols, [LE] * (2 * n), rhs, sense="max"))
        if not sol.optimal:
            raise LpError(sol, f"joint max-flow master LP ended with status {sol.status!r}")
        duals = np.maximum(sol.duals, 0.0)
        if not price(duals):
            break
    nu, eta = duals[:n], duals[n:]
    flow = np.zeros(bdd.num_arcs)
    for f, p in zip(sol.x, pool.paths):
        flow[p] += f
    pool.age(sol.x)
    return JointFlow(float(sol.objective), flow, nu, eta, sol)


def _maxflow_joint_arcs(bdd: Bdd, x) -> JointFlow:
    p = joint_flow_problem(bdd, x)
    sol = solve(p)
    if not sol.optimal:
        raise LpError(sol, f"joint max-flow LP ended with status {sol.status!r}")
    k = bdd.num_nodes - 2
    duals = np.maximum(sol.duals[k:], 0.0)
    return JointFlow(float(sol.objective), sol.x, duals[:bdd.n], duals[bdd.n:], sol)


def cglp_cut(bdd: Bdd, x, tol: float = EMIT_TOL, method: str = "paths",
             pool: PathPool | None = None) -> CglpCut | None:
    """Cut from the joint model, or None when ``x`` is (numerically) in the hull."""
    res = maxflow_joint(bdd, x, method, pool)
    cut = CglpCut(res.nu, res.eta, res.value)
    if cut.violation(np.asarray(x, dtype=float)) <= tol:
        return None
    return cut


def maxflow_cap(bdd: Bdd, x) -> CapFlow:
    """Per-arc capacity max flow with a minimum cut from residual reachability."""
    x = _check_point(bdd, x)
    cap = arc_capacities(bdd, x)
    value, flow, side = kernels.max_flow(bdd.num_nodes, bdd.arc_src, bdd.arc_dst, cap,
                                         bdd.root, bdd.terminal)
    side = np.asarray(side, dtype=bool)
    cut = np.nonzero(side[bdd.arc_src] & ~side[bdd.arc_dst])[0]
    return CapFlow(float(value), np.asarray(flow), side, cut)


def maxflow_cap_lp(bdd: Bdd, x) -> LpSolution:
    """The per-arc model as an LP (cross-check for the combinatorial solver)."""
    x = _check_point(bdd, x)
    p = joint_flow_problem(bdd, x)
    k = bdd.num_nodes - 2
    A = p.A[:k]
    c = p.c
    return solve(LpProblem(c, A, [EQ] * k, np.zeros(k), upper=arc_capacities(bdd, x)))


def mincut_cut(bdd: Bdd, x, tol: float = EMIT_TOL) -> MinCutCut | None:
    """Cut from a minimum r-t cut of the per-arc model, or None."""
    res = maxflow_cap(bdd, x)
    alpha = np.zeros(bdd.num_arcs, dtype=np.int8)
    alpha[res.cut_arcs] = 1
    n = bdd.n
    layer = bdd.arc_layer[res.cut_arcs]
    val = bdd.arc_val[res.cut_arcs]
    coef1 = np.bincount(layer[val == 1], minlength=n).astype(float)
    coef0 = np.bincount(layer[val == 0], minlength=n).astype(float)
    cut = MinCutCut(alpha, coef1, coef0, res.value)
    if cut.violation(np.asarray(x, dtype=float)) <= tol:
        return None
    return cut


def cut_to_inequality(cut: CglpCut | MinCutCut) -> Inequality:
    """``nu.x + eta.(1 - x) >= 1``  as  ``(eta - nu).x <= sum(eta) - 1``."""
    nu = np.asarray(cut.nu, dtype=float)
    eta = np.asarray(cut.eta, dtype=float)
    return Inequality(eta - nu, float(eta.sum()) - 1.0)
