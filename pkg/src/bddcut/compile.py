"""Incremental-refinement compilation of an SOC constraint into a BDD.

Every node keeps interval bounds on the ``l + 1`` linear components of the
constraint: ``Q_0 = a.x`` and ``Q_k = d_k.x - h_k``.  ``down`` bounds cover
the partial sums over root-to-node paths, ``up`` bounds the sums over the
remaining suffixes.  Starting from the width-one diagram, each round

1. recomputes ``up`` bounds bottom-up, dropping nodes without children;
2. for each layer: recomputes ``down`` bounds (dropping unreachable nodes),
   splits nodes whose intervals are at least ``split_threshold`` wide while
   the layer is narrower than ``max_width``, then filters the layer's
   outgoing arcs whose every completion violates the constraint.

Rounds repeat until nothing changes.  Diagonal-knapsack constraints use two
components (``a.x`` and ``sum d_ii^2 x_i``) instead of ``n + 1``.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .bdd import Bdd, reduce
from .model import FEAS_TOL, SocConstraint


@dataclass(frozen=True)
class BuildConfig:
    """``max_width=None`` means unbounded (exact build, given enough rounds)."""

    max_width: int | None = None
    split_threshold: float = 1e-6
    max_refinement_rounds: int = 1000

    def __post_init__(self):
        if self.max_width is not None and self.max_width < 1:
            raise ValueError("max_width must be at least 1")
        if not self.split_threshold > 0:
            raise ValueError("split_threshold must be positive")
        if self.max_refinement_rounds < 1:
            raise ValueError("max_refinement_rounds must be at least 1")


@dataclass(frozen=True)
class NodeState:
    down_min: np.ndarray
    down_max: np.ndarray
    up_min: np.ndarray
    up_max: np.ndarray

    def down_pairs(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.down_min.tolist(), self.down_max.tolist()))

    def up_pairs(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.up_min.tolist(), self.up_max.tolist()))


@dataclass
class BuildStats:
    rounds: int = 0
    splits: int = 0
    arcs_filtered: int = 0
    converged: bool = False
    exact: bool = False


class _Layer:
    """Mutable node data of one layer; ``kids`` points into the next layer."""

    __slots__ = ("kids", "dmin", "dmax", "umin", "umax")

    def __init__(self, kids, dmin, dmax, umin, umax):
        self.kids = kids
        self.dmin = dmin
        self.dmax = dmax
        self.umin = umin
        self.umax = umax

    @property
    def size(self) -> int:
        return self.kids.shape[0]

    def take(self, idx) -> None:
        self.kids = self.kids[idx]
        self.dmin = self.dmin[idx]
        self.dmax = self.dmax[idx]
        self.umin = self.umin[idx]
        self.umax = self.umax[idx]


class BddBuilder:
    """Step-by-step driver of the refinement procedure for one constraint.

    Layers are numbered ``0..n`` (root at 0); arcs leaving layer ``i`` fix
    variable ``x_i``.  The individual steps are public so they can be
    inspected in isolation; :meth:`run` chains them.
    """

    def __init__(self, con: SocConstraint, cfg: BuildConfig | None = None):
        self.con = con
        self.cfg = cfg or BuildConfig()
        self.n = con.n
        self.knapsack = con.kind == "diagonal-knapsack"
        if self.knapsack:
            coef = np.column_stack([con.a, np.diag(con.D) ** 2])
            root = np.zeros(2)
        else:
            coef = np.column_stack([con.a, con.D.T]) if con.l else con.a[:, None].copy()
            root = np.concatenate([[0.0], -con.h])
        self.coef = coef  # (n, l+1): increment of each component on a 1-arc
        self.root_state = root
        self.width_limit = self.cfg.max_width if self.cfg.max_width is not None else math.inf
        self.stats = BuildStats()
        self.empty = False
        n, dim = self.n, coef.shape[1]
        self.layers: list[_Layer] = []
        for i in range(n + 1):
            kids = np.zeros((1, 2), dtype=np.int64) if i < n else np.full((1, 2), -1, dtype=np.int64)
            z = np.zeros((1, dim))
            self.layers.append(_Layer(kids, z.copy(), z.copy(), z.copy(), z.copy()))
        self.layers[0].dmin[0] = root
        self.layers[0].dmax[0] = root

    @property
    def dim(self) -> int:
        return self.coef.shape[1]

    # state inspection -----------------------------------------------------

    def node_state(self, layer: int, index: int) -> NodeState:
        L = self.layers[layer]
        return NodeState(L.dmin[index].copy(), L.dmax[index].copy(),
                         L.umin[index].copy(), L.umax[index].copy())

    def layer_sizes(self) -> list[int]:
        return [L.size for L in self.layers]

    # bottom-up ------------------------------------------------------------

    def update_bottomup(self) -> bool:
        """Recompute ``up`` bounds; drop nodes left without children.

        Returns True if any node was removed.
        """
        changed = False
        last = self.layers[self.n]
        last.umin[:] = 0.0
        last.umax[:] = 0.0
        for i in range(self.n - 1, -1, -1):
            L, nxt = self.layers[i], self.layers[i + 1]
            lo = np.full((L.size, self.dim), np.inf)
            hi = np.full((L.size, self.dim), -np.inf)
            for v in (0, 1):
                c = L.kids[:, v]
                has = c >= 0
                step = self.coef[i] * v
                lo[has] = np.minimum(lo[has], nxt.umin[c[has]] + step)
                hi[has] = np.maximum(hi[has], nxt.umax[c[has]] + step)
            L.umin, L.umax = lo, hi
            alive = (L.kids >= 0).any(axis=1)
            if not alive.all():
                changed = True
                self._drop(i, alive)
                if self.empty:
                    return True
        return changed

    def _drop(self, i: int, keep: np.ndarray) -> None:
        """Keep only ``keep`` nodes of layer ``i`` and fix the parent table."""
        if i == 0 or i == self.n:
            if not keep.all():
                self.empty = True
            return
        self.layers[i].take(keep)
        remap = np.full(keep.size, -1, dtype=np.int64)
        remap[keep] = np.arange(int(keep.sum()))
        parent = self.layers[i - 1].kids
        self.layers[i - 1].kids = np.where(parent >= 0, remap[np.maximum(parent, 0)], -1)
        if self.layers[i].size == 0:
            self.empty = True

    # top-down -------------------------------------------------------------

    def _incoming(self, i: int):
        """Arcs into layer ``i``: parent ids, values, targets, arriving bounds."""
        prev = self.layers[i - 1]
        p, v = np.nonzero(prev.kids >= 0)
        c = prev.kids[p, v]
        step = self.coef[i - 1][None, :] * v[:, None]
        return p, v, c, prev.dmin[p] + step, prev.dmax[p] + step

    def update_topdown(self, i: int) -> bool:
        """Recompute ``down`` bounds of layer ``i``; drop unreachable nodes."""
        if i == 0:
            return False
        L = self.layers[i]
        _, _, c, amin, amax = self._incoming(i)
        lo = np.full((L.size, self.dim), np.inf)
        hi = np.full((L.size, self.dim), -np.inf)
        np.minimum.at(lo, c, amin)
        np.maximum.at(hi, c, amax)
        L.dmin, L.dmax = lo, hi
        reached = np.zeros(L.size, dtype=bool)
        reached[c] = True
        if not reached.all():
            self._drop(i, reached)
            return True
        return False

    # splitting ------------------------------------------------------------

    def split_layer(self, i: int) -> int:
        """Split wide nodes of layer ``i`` until all are narrow or the layer is full.

        The widest node (lowest index on ties) is split first.  Its incoming
        arcs are partitioned by whether their arriving value in the widest
        component lies below the node's interval midpoint.  Returns the
        number of splits performed.
        """
        if i == 0 or i == self.n:
            return 0
        L = self.layers[i]
        delta = self.cfg.split_threshold
        if L.size >= self.width_limit:
            return 0
        width = L.dmax - L.dmin
        wide = np.nonzero(width.max(axis=1) >= delta)[0]
        if wide.size == 0:
            return 0
        p, v, c, amin, amax = self._incoming(i)
        order = np.argsort(c, kind="stable")
        bounds = np.searchsorted(c[order], np.arange(L.size + 1))
        members = [order[bounds[u]:bounds[u + 1]] for u in range(L.size)]

        cap = int(min(self.width_limit, len(c)))
        size = L.size
        dmin = np.empty((cap, self.dim))
        dmax = np.empty((cap, self.dim))
        dmin[:size], dmax[:size] = L.dmin, L.dmax
        origin = list(range(size))  # node each row copies its children/up state from
        heap = [(-float(width[u].max()), int(u)) for u in wide]
        heapq.heapify(heap)
        splits = 0
        while heap and size < self.width_limit:
            _, u = heapq.heappop(heap)
            parts = _partition(members[u], amin, amax, dmin[u], dmax[u], delta)
            if parts is None:
                continue
            low, high = parts
            members[u] = low
            members.append(high)
            origin.append(origin[u])
            c[high] = size
            for node, idx in ((u, low), (size, high)):
                dmin[node] = amin[idx].min(axis=0)
                dmax[node] = amax[idx].max(axis=0)
                w = float((dmax[node] - dmin[node]).max())
                if w >= delta:
                    heapq.heappush(heap, (-w, node))
            size += 1
            splits += 1
        if splits:
            src = np.asarray(origin)
            L.kids = L.kids[src]
            L.umin = L.umin[src]
            L.umax = L.umax[src]
            L.dmin = dmin[:size].copy()
            L.dmax = dmax[:size].copy()
            self.layers[i - 1].kids[p, v] = c
            self.stats.splits += splits
        return splits

    # filtering ------------------------------------------------------------

    def arc_bound(self, i: int, u: int, value: int) -> float:
        """Lower bound on the constraint lhs over all paths through an arc."""
        L = self.layers[i]
        c = int(L.kids[u, value])
        if c < 0:
            raise ValueError(f"node {u} of layer {i} has no {value}-arc")
        nxt = self.layers[i + 1]
        lhs = self._bounds(L.dmin[u:u + 1], L.dmax[u:u + 1], nxt.umin[c:c + 1],
                           nxt.umax[c:c + 1], self.coef[i] * value)
        return float(lhs[0])

    def _bounds(self, dmin, dmax, umin, umax, step) -> np.ndarray:
        lo = dmin + step + umin
        base = lo[:, 0]
        if self.dim == 1:
            return base
        om = self.con.omega
        if self.knapsack:
            return base + om * np.sqrt(np.maximum(lo[:, 1], 0.0))
        hi = (dmax + step + umax)[:, 1:]
        lo = lo[:, 1:]
        g = np.where(lo > 0, lo * lo, np.where(hi < 0, hi * hi, 0.0))
        return base + om * np.sqrt(g.sum(axis=1))

    def filter_arc(self, i: int, u: int, value: int) -> bool:
        """True iff every path through the arc violates the constraint."""
        return self.arc_bound(i, u, value) > self.con.b + FEAS_TOL

    def filter_layer(self, i: int) -> int:
        """Remove the arcs leaving layer ``i`` that cannot lie on a feasible path."""
        if i == self.n:
            return 0
        L, nxt = self.layers[i], self.layers[i + 1]
        removed = 0
        for v in (0, 1):
            c = L.kids[:, v]
            has = np.nonzero(c >= 0)[0]
            if has.size == 0:
                continue
            cc = c[has]
            lhs = self._bounds(L.dmin[has], L.dmax[has], nxt.umin[cc], nxt.umax[cc],
                               self.coef[i] * v)
            bad = has[lhs > self.con.b + FEAS_TOL]
            if bad.size:
                L.kids[bad, v] = -1
                removed += bad.size
        self.stats.arcs_filtered += removed
        return removed

    # driver ---------------------------------------------------------------

    def refine_round(self) -> bool:
        """One bottom-up pass plus one top-down pass; True if anything changed."""
        modified = self.update_bottomup()
        if self.empty:
            return True
        for i in range(self.n):
            modified |= self.update_topdown(i)
            if self.empty:
                return True
            modified |= self.split_layer(i) > 0
            modified |= self.filter_layer(i) > 0
        modified |= self.update_topdown(self.n)
        return modified

    def run(self) -> Bdd:
        st = self.stats
        while st.rounds < self.cfg.max_refinement_rounds:
            st.rounds += 1
            if not self.refine_round():
                st.converged = True
                break
            if self.empty:
                st.converged = True
                break
        if self.empty:
            st.exact = st.converged
            return Bdd.empty(self.n)
        narrow = all(float((L.dmax - L.dmin).max(initial=0.0)) < self.cfg.split_threshold
                     for L in self.layers[:-1])  # the terminal merges everything
        st.exact = st.converged and narrow
        return reduce(self.to_bdd())

    def to_bdd(self) -> Bdd:
        """Current diagram (pruned, not reduced)."""
        if self.empty:
            return Bdd.empty(self.n)
        return Bdd.from_layers(self.n, [L.kids for L in self.layers[:-1]])


def _partition(idx, amin, amax, nmin, nmax, delta):
    """Split arc indices ``idx`` into two nonempty groups, or None."""
    width = nmax - nmin
    for k in np.argsort(-width, kind="stable"):
        if width[k] < delta:
            break
        key = 0.5 * (amin[idx, k] + amax[idx, k])
        mid = 0.5 * (nmin[k] + nmax[k])
        low = key < mid
        if low.any() and not low.all():
            return idx[low], idx[~low]
        keys = np.unique(key)
        if keys.size > 1:
            cuts = 0.5 * (keys[1:] + keys[:-1])
            thr = cuts[np.argmin(np.abs(cuts - mid))]
            low = key < thr
            return idx[low], idx[~low]
    return None


def build_bdd(con: SocConstraint, cfg: BuildConfig | None = None) -> Bdd:
    """Reduced relaxed BDD for ``con`` (exact when the width limit never binds)."""
    return BddBuilder(con, cfg).run()


def build_with_stats(con: SocConstraint, cfg: BuildConfig | None = None) -> tuple[Bdd, BuildStats]:
    b = BddBuilder(con, cfg)
    bdd = b.run()
    return bdd, b.stats
