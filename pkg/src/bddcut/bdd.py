"""Layered binary decision diagrams.

A :class:`Bdd` over ``n`` variables has ``n + 1`` layers.  Layer ``i``
(0-based, ``i < n``) holds the nodes where variable ``x_i`` is decided, the
single root is the only node of layer 0 and the single terminal the only node
of layer ``n``.  Nodes carry global integer ids that are contiguous per layer,
so every arc goes from a smaller id to a larger one and sorting arcs by source
id is a topological order.

Each node stores at most one child per arc value in ``children[node, value]``
(``-1`` when absent).  Arcs are numbered by scanning ``children`` row-major.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import kernels

PATH_LIMIT = 2**24


class InvalidBddError(ValueError):
    """Raised when arrays do not describe a well-formed layered diagram."""


class EmptyBddError(ValueError):
    """Raised when an operation needs at least one r-t path."""


class PathLimitError(RuntimeError):
    """Raised when explicit enumeration would exceed the path-count guard."""


class Bdd:
    """Immutable, pruned layered BDD.

    Use :meth:`from_layers` or :meth:`from_arcs` to build one from raw data:
    both drop unreachable and dead-end nodes.  The constructor itself only
    validates.
    """

    __slots__ = ("n", "layer_offsets", "children", "__dict__")

    def __init__(self, n: int, layer_offsets, children):
        n = int(n)
        if n < 1:
            raise InvalidBddError("a BDD needs at least one variable")
        offsets = np.asarray(layer_offsets, dtype=np.int64)
        kids = np.asarray(children, dtype=np.int64).reshape(-1, 2)
        if offsets.shape != (n + 2,):
            raise InvalidBddError(f"expected {n + 2} layer offsets, got {offsets.shape}")
        self.n = n
        self.layer_offsets = offsets
        self.children = kids
        self.layer_offsets.setflags(write=False)
        self.children.setflags(write=False)
        if not self.is_empty:
            self._validate()

    @classmethod
    def empty(cls, n: int) -> "Bdd":
        """The sentinel diagram with no paths."""
        return cls(n, np.zeros(n + 2, dtype=np.int64), np.zeros((0, 2), dtype=np.int64))

    @property
    def is_empty(self) -> bool:
        return self.children.shape[0] == 0

    def _validate(self) -> None:
        n, off, kids = self.n, self.layer_offsets, self.children
        if off[0] != 0 or np.any(np.diff(off) < 1):
            raise InvalidBddError("every layer needs at least one node")
        if off[1] != 1 or off[n + 1] - off[n] != 1:
            raise InvalidBddError("root and terminal layers must be singletons")
        if kids.shape[0] != off[-1]:
            raise InvalidBddError("children table does not match layer offsets")
        layer = self.node_layer
        inner = layer < n
        for v in (0, 1):
            c = kids[:, v]
            has = c >= 0
            if np.any(has & ~inner):
                raise InvalidBddError("terminal node has outgoing arcs")
            if np.any(c[has] >= off[-1]):
                raise InvalidBddError("child id out of range")
            if np.any(layer[c[has]] != layer[has] + 1):
                raise InvalidBddError("arc skips or reverses a layer")
        out_deg = (kids >= 0).sum(axis=1)
        if np.any(out_deg[inner] == 0):
            raise InvalidBddError("non-terminal node without outgoing arcs")
        in_deg = np.bincount(kids[kids >= 0], minlength=off[-1])
        if np.any(in_deg[1:] == 0):
            raise InvalidBddError("non-root node without incoming arcs")

    # construction helpers -------------------------------------------------

    @classmethod
    def from_layers(cls, n: int, layer_children: Sequence[np.ndarray]) -> "Bdd":
        """Build from per-layer child tables with layer-local indices.

        ``layer_children[i]`` has shape ``(|N_i|, 2)`` and refers to nodes of
        layer ``i + 1`` by their position in that layer.  Unreachable and
        dead-end nodes are dropped; an empty path set gives :meth:`empty`.
        """
        if len(layer_children) != n:
            raise InvalidBddError(f"expected {n} child tables, got {len(layer_children)}")
        tables = [np.array(t, dtype=np.int64).reshape(-1, 2) for t in layer_children]
        if tables[0].shape[0] != 1:
            raise InvalidBddError("root layer must be a singleton")
        sizes = [t.shape[0] for t in tables] + [1]
        for i, t in enumerate(tables):
            if np.any(t >= sizes[i + 1]):
                raise InvalidBddError(f"layer {i} refers past the next layer")

        # backward: alive = reaches terminal
        alive = [None] * (n + 1)
        alive[n] = np.ones(1, dtype=bool)
        for i in range(n - 1, -1, -1):
            t = tables[i]
            ok = np.zeros(t.shape, dtype=bool)
            for v in (0, 1):
                has = t[:, v] >= 0
                ok[has, v] = alive[i + 1][t[has, v]]
            t[~ok] = -1
            alive[i] = ok.any(axis=1)
        if not alive[0][0]:
            return cls.empty(n)
        # forward: keep nodes reachable from the root
        reach = np.ones(1, dtype=bool)
        keep = [reach]
        for i in range(n):
            t = tables[i]
            nxt = np.zeros(sizes[i + 1], dtype=bool)
            sub = t[reach]
            nxt[sub[sub >= 0]] = True
            keep.append(nxt)
            reach = nxt
        offsets = [0]
        for k in keep:
            offsets.append(offsets[-1] + int(k.sum()))
        new_id = [np.cumsum(k) - 1 + offsets[i] for i, k in enumerate(keep)]
        rows = []
        for i in range(n):
            t = tables[i][keep[i]]
            mapped = np.where(t >= 0, new_id[i + 1][np.maximum(t, 0)], -1)
            rows.append(mapped)
        rows.append(np.full((1, 2), -1, dtype=np.int64))
        return cls(n, offsets, np.vstack(rows))

    @classmethod
    def from_arcs(cls, n: int, layer_sizes: Sequence[int],
                  arcs: Iterable[tuple[int, int, int]]) -> "Bdd":
        """Build from global node ids (contiguous per layer) and ``(src, dst, value)`` arcs."""
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) != n + 1:
            raise InvalidBddError(f"expected {n + 1} layer sizes")
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        layer_of = np.repeat(np.arange(n + 1), sizes)
        tables = [np.full((sizes[i], 2), -1, dtype=np.int64) for i in range(n)]
        for s, d, v in arcs:
            s, d, v = int(s), int(d), int(v)
            if v not in (0, 1):
                raise InvalidBddError(f"arc value must be 0 or 1, got {v}")
            if not (0 <= s < offsets[-1] and 0 <= d < offsets[-1]):
                raise InvalidBddError(f"arc ({s}, {d}) refers to an unknown node")
            i = layer_of[s]
            if i >= n or layer_of[d] != i + 1:
                raise InvalidBddError(f"arc ({s}, {d}) does not join consecutive layers")
            row = tables[i][s - offsets[i]]
            if row[v] >= 0 and row[v] != d - offsets[i + 1]:
                raise InvalidBddError(f"node {s} has two arcs with value {v}")
            row[v] = d - offsets[i + 1]
        return cls.from_layers(n, tables)

    # structure ------------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return int(self.children.shape[0])

    @property
    def root(self) -> int:
        return 0

    @property
    def terminal(self) -> int:
        return self.num_nodes - 1

    @cached_property
    def layer_sizes(self) -> np.ndarray:
        return np.diff(self.layer_offsets)

    @property
    def width(self) -> int:
        return int(self.layer_sizes.max()) if not self.is_empty else 0

    def nodes_in(self, layer: int) -> range:
        return range(int(self.layer_offsets[layer]), int(self.layer_offsets[layer + 1]))

    @cached_property
    def node_layer(self) -> np.ndarray:
        return np.repeat(np.arange(self.n + 1), self.layer_sizes)

    @cached_property
    def _arcs(self):
        src, val = np.nonzero(self.children >= 0)
        dst = self.children[src, val]
        layer = self.node_layer[src] if len(src) else np.zeros(0, dtype=np.int64)
        out = (src.astype(np.int64), dst.astype(np.int64), val.astype(np.int64), layer.astype(np.int64))
        for arr in out:
            arr.setflags(write=False)
        return out

    @property
    def arc_src(self) -> np.ndarray:
        return self._arcs[0]

    @property
    def arc_dst(self) -> np.ndarray:
        return self._arcs[1]

    @property
    def arc_val(self) -> np.ndarray:
        return self._arcs[2]

    @property
    def arc_layer(self) -> np.ndarray:
        return self._arcs[3]

    @property
    def num_arcs(self) -> int:
        return int(len(self.arc_src))

    def arcs(self) -> list[tuple[int, int, int]]:
        return list(zip(self.arc_src.tolist(), self.arc_dst.tolist(), self.arc_val.tolist()))

    def node_label(self, node: int) -> tuple[int, int]:
        """``(layer, index-within-layer)`` of a global node id."""
        layer = int(self.node_layer[node])
        return layer, int(node - self.layer_offsets[layer])

    def count_paths(self) -> int:
        """Exact number of r-t paths (arbitrary precision)."""
        if self.is_empty:
            return 0
        count = [0] * self.num_nodes
        count[self.terminal] = 1
        kids = self.children.tolist()
        for u in range(self.num_nodes - 2, -1, -1):
            c0, c1 = kids[u]
            count[u] = (count[c0] if c0 >= 0 else 0) + (count[c1] if c1 >= 0 else 0)
        return count[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Bdd):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.layer_offsets, other.layer_offsets)
                and np.array_equal(self.children, other.children))

    def __hash__(self):
        return hash((self.n, self.layer_offsets.tobytes(), self.children.tobytes()))

    def __repr__(self) -> str:
        if self.is_empty:
            return f"Bdd(n={self.n}, empty)"
        return f"Bdd(n={self.n}, nodes={self.num_nodes}, arcs={self.num_arcs}, width={self.width})"


def require_nonempty(bdd: Bdd) -> None:
    if bdd.is_empty:
        raise EmptyBddError("the BDD encodes the empty set")


def width_one(n: int) -> Bdd:
    """One node per layer with both arc values between consecutive layers."""
    if n < 1:
        raise InvalidBddError("n must be positive")
    kids = np.empty((n + 1, 2), dtype=np.int64)
    kids[:n, 0] = kids[:n, 1] = np.arange(1, n + 1)
    kids[n] = -1
    return Bdd(n, np.arange(n + 2), kids)


def enumerate_paths(bdd: Bdd, limit: int = PATH_LIMIT) -> frozenset[tuple[int, ...]]:
    """The set of points encoded by the r-t paths."""
    return frozenset(map(tuple, path_matrix(bdd, limit).tolist()))


def path_matrix(bdd: Bdd, limit: int = PATH_LIMIT) -> np.ndarray:
    """All path points as a ``(|Sol|, n)`` uint8 array in lexicographic order."""
    if bdd.is_empty:
        return np.zeros((0, bdd.n), dtype=np.uint8)
    total = bdd.count_paths()
    if total > limit:
        raise PathLimitError(f"{total} paths exceed the enumeration limit {limit}")
    nodes = np.zeros(1, dtype=np.int64)
    bits = np.zeros((1, 0), dtype=np.uint8)
    for _ in range(bdd.n):
        parts_nodes, parts_bits = [], []
        for v in (0, 1):
            nxt = bdd.children[nodes, v]
            has = nxt >= 0
            parts_nodes.append(nxt[has])
            col = np.full((int(has.sum()), 1), v, dtype=np.uint8)
            parts_bits.append(np.hstack([bits[has], col]))
        nodes = np.concatenate(parts_nodes)
        bits = np.vstack(parts_bits)
    pts = np.unique(bits, axis=0)
    return pts


def reduce(bdd: Bdd) -> Bdd:
    """Merge nodes with identical ``(value, target)`` signatures bottom-up.

    Returns the unique reduced diagram for the fixed variable order; node order
    within a layer follows first occurrence in the input.
    """
    if bdd.is_empty:
        return bdd
    n, off = bdd.n, bdd.layer_offsets
    # rep[u] = layer-local id of u's class in the reduced layer
    rep = np.zeros(bdd.num_nodes, dtype=np.int64)
    tables: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    for i in range(n - 1, -1, -1):
        lo, hi = int(off[i]), int(off[i + 1])
        kids = bdd.children[lo:hi]
        sig = np.where(kids >= 0, rep[np.maximum(kids, 0)], -1)
        # exact row comparison; np.unique sorts, so restore first-occurrence order
        uniq, first, inverse = np.unique(sig, axis=0, return_index=True, return_inverse=True)
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        rep[lo:hi] = rank[inverse.reshape(-1)]
        tables[i] = uniq[order]
    return Bdd.from_layers(n, tables)


def is_reduced(bdd: Bdd) -> bool:
    return bdd.is_empty or np.array_equal(reduce(bdd).layer_sizes, bdd.layer_sizes)


@dataclass(frozen=True)
class NodePotentials:
    """Longest-path values from the root (``down``) and to the terminal (``up``)."""

    down: np.ndarray
    up: np.ndarray


def arc_weights(bdd: Bdd, pi: Sequence[float]) -> np.ndarray:
    """Length ``pi_i * v_a`` of every arc, with ``i`` the layer of its source."""
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (bdd.n,):
        raise ValueError(f"coefficient vector must have length {bdd.n}")
    return pi[bdd.arc_layer] * bdd.arc_val


def potentials(bdd: Bdd, pi: Sequence[float]) -> NodePotentials:
    """Top-down and bottom-up longest-path values under ``arc_weights(bdd, pi)``."""
    require_nonempty(bdd)
    w = arc_weights(bdd, pi)
    down, up = kernels.longest_paths(bdd.num_nodes, bdd.arc_src, bdd.arc_dst, w,
                                     bdd.root, bdd.terminal)
    if np.isneginf(down).any() or np.isneginf(up).any():
        raise InvalidBddError("structural error: node off every r-t path")
    return NodePotentials(down, up)


def arc_lengths(bdd: Bdd, pots: NodePotentials, pi: Sequence[float]) -> np.ndarray:
    """Best r-t path value among paths through each arc."""
    return pots.down[bdd.arc_src] + pots.up[bdd.arc_dst] + arc_weights(bdd, pi)


# text formats ---------------------------------------------------------------

def dumps(bdd: Bdd) -> str:
    """Line format: header, then ``layer id`` per node, then ``src dst value`` per arc."""
    lines = [f"bdd {bdd.n} {bdd.num_nodes} {bdd.num_arcs}"]
    lines.extend(f"{layer} {u}" for u, layer in enumerate(bdd.node_layer.tolist()))
    lines.extend(f"{s} {d} {v}" for s, d, v in bdd.arcs())
    return "\n".join(lines) + "\n"


def loads(text: str) -> Bdd:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0][0] != "bdd" or len(lines[0]) != 4:
        raise InvalidBddError("line 1: expected header 'bdd <n> <nodes> <arcs>'")
    try:
        n, num_nodes, num_arcs = (int(t) for t in lines[0][1:])
    except ValueError as exc:
        raise InvalidBddError(f"line 1: {exc}") from None
    if len(lines) != 1 + num_nodes + num_arcs:
        raise InvalidBddError(f"expected {num_nodes} node and {num_arcs} arc lines")
    if num_nodes == 0:
        return Bdd.empty(n)
    layers = []
    for k, toks in enumerate(lines[1:1 + num_nodes]):
        if len(toks) != 2 or int(toks[1]) != k:
            raise InvalidBddError(f"node line {k + 2}: expected '<layer> {k}'")
        layers.append(int(toks[0]))
    if layers != sorted(layers):
        raise InvalidBddError("node lines must be grouped by layer")
    sizes = np.bincount(layers, minlength=n + 1)
    arcs = []
    for k, toks in enumerate(lines[1 + num_nodes:]):
        if len(toks) != 3:
            raise InvalidBddError(f"arc line {k + 2 + num_nodes}: expected '<src> <dst> <value>'")
        arcs.append(tuple(int(t) for t in toks))
    bdd = Bdd.from_arcs(n, sizes, arcs)
    if bdd.num_nodes != num_nodes or bdd.num_arcs != num_arcs:
        raise InvalidBddError("dump contains unreachable or dead-end nodes")
    return bdd


def to_dot(bdd: Bdd, name: str = "bdd") -> str:
    """Graphviz description; dashed arcs have value 0."""
    out = [f"digraph {name} {{", "  rankdir=TB;"]
    for layer in range(bdd.n + 1):
        ids = " ".join(f"n{u};" for u in bdd.nodes_in(layer))
        out.append(f"  {{ rank=same; {ids} }}")
    for u in range(bdd.num_nodes):
        label = "r" if u == bdd.root else ("t" if u == bdd.terminal else f"{u}")
        out.append(f'  n{u} [label="{label}"];')
    for s, d, v in bdd.arcs():
        style = "solid" if v else "dashed"
        out.append(f"  n{s} -> n{d} [style={style}];")
    out.append("}")
    return "\n".join(out) + "\n"
