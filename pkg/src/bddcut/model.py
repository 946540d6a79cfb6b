"""SOC constraints, instances, seeded generators and the instance text format.

A constraint reads ``a.x + omega * ||D x - h||_2 <= b`` where ``D`` is
``l x n`` with rows ``d_k``.  Three kinds share this form:

* ``general``: any ``D`` and ``h``;
* ``diagonal-knapsack``: ``l = n``, diagonal ``D``, ``h = 0``, so for binary
  ``x`` the norm is ``sqrt(sum_i d_ii^2 x_i)``;
* ``linear``: ``l = 0``, i.e. ``a.x <= b``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FEAS_TOL = 1e-9
KINDS = ("general", "diagonal-knapsack", "linear")


@dataclass(frozen=True, eq=False)
class SocConstraint:
    a: np.ndarray
    D: np.ndarray
    h: np.ndarray
    omega: float
    b: float
    kind: str = "general"

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        n = a.shape[0]
        D = np.asarray(self.D, dtype=float).reshape(-1, n) if np.size(self.D) else np.zeros((0, n))
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if self.kind not in KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if h.shape[0] != D.shape[0]:
            raise ValueError(f"h has length {h.shape[0]} but D has {D.shape[0]} rows")
        if self.omega < 0:
            raise ValueError("omega must be nonnegative")
        if self.kind == "linear" and D.shape[0] != 0:
            raise ValueError("linear constraints have no norm term")
        if self.kind == "diagonal-knapsack":
            if D.shape != (n, n) or np.any(D != np.diag(np.diag(D))) or np.any(h != 0):
                raise ValueError("diagonal-knapsack needs square diagonal D and h = 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def linear(cls, a: Sequence[float], b: float) -> "SocConstraint":
        a = np.asarray(a, dtype=float)
        return cls(a, np.zeros((0, a.size)), np.zeros(0), 0.0, b, "linear")

    @classmethod
    def diagonal_knapsack(cls, a, d, omega: float, b: float) -> "SocConstraint":
        d = np.asarray(d, dtype=float)
        return cls(a, np.diag(d), np.zeros(d.size), omega, b, "diagonal-knapsack")

    @property
    def n(self) -> int:
        return int(self.a.shape[0])

    @property
    def l(self) -> int:  # noqa: E743
        return int(self.D.shape[0])

    def lhs(self, x) -> np.ndarray | float:
        return evaluate(self, x)

    def is_feasible(self, x) -> np.ndarray | bool:
        return evaluate(self, x) <= self.b + FEAS_TOL

    def __eq__(self, other) -> bool:
        if not isinstance(other, SocConstraint):
            return NotImplemented
        return (self.kind == other.kind and self.omega == other.omega and self.b == other.b
                and np.array_equal(self.a, other.a) and np.array_equal(self.D, other.D)
                and np.array_equal(self.h, other.h))


def evaluate(con: SocConstraint, x) -> np.ndarray | float:
    """Left-hand side ``a.x + omega * sqrt(sum_k (d_k.x - h_k)^2)``.

    ``x`` may be a single point or a ``(m, n)`` batch.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != con.n:
        raise ValueError(f"point has dimension {x.shape[-1]}, constraint has {con.n}")
    lin = x @ con.a
    if con.l == 0:
        return lin if x.ndim > 1 else float(lin)
    resid = x @ con.D.T - con.h
    val = lin + con.omega * np.sqrt(np.sum(resid * resid, axis=-1))
    return val if x.ndim > 1 else float(val)


@dataclass(eq=False)
class Instance:
    """``max c.x`` over binary ``x`` subject to every constraint."""

    c: np.ndarray
    constraints: list[SocConstraint]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        for j, con in enumerate(self.constraints):
            if con.n != self.n:
                raise ValueError(f"constraint {j} has dimension {con.n}, objective has {self.n}")

    @property
    def n(self) -> int:
        return int(self.c.shape[0])

    @property
    def m(self) -> int:
        return len(self.constraints)

    def is_feasible(self, x) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        ok = np.ones(x.shape[:-1], dtype=bool) if x.ndim > 1 else True
        for con in self.constraints:
            ok = ok & con.is_feasible(x)
        return ok

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (np.array_equal(self.c, other.c) and self.constraints == other.constraints
                and self.meta == other.meta)


# generation -----------------------------------------------------------------
#
# Streams: PCG64 seeded through SeedSequence(seed).spawn(m + 1); child 0 draws
# the objective, child j + 1 draws constraint j.  Generator.integers is
# unbiased (rejection based), so instances are identical on every platform.

def _streams(seed: int, m: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(m + 1)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def rhs_from_tightness(a: np.ndarray, D: np.ndarray, omega: float, t: float) -> float:
    """``t * (sum a_i^+ + omega * sqrt(sum_rows max(sum d^+, sum d^-)^2))``."""
    a = np.asarray(a, dtype=float)
    D = np.asarray(D, dtype=float).reshape(-1, a.size)
    pos = np.maximum(D, 0.0).sum(axis=1)
    neg = np.maximum(-D, 0.0).sum(axis=1)
    spread = np.maximum(pos, neg)
    return float(t * (np.maximum(a, 0.0).sum() + omega * math.sqrt(float(spread @ spread))))


def density(n: int) -> float:
    return min(1.0, 2.0 / math.sqrt(n))


def _sparse_nonzero(rng: np.random.Generator, shape, p: float, bound: int) -> np.ndarray:
    mask = rng.random(shape) < p
    mag = rng.integers(1, bound, size=shape, endpoint=True)
    sign = np.where(rng.random(shape) < 0.5, -1, 1)
    return np.where(mask, sign * mag, 0).astype(float)


def generate_soc_cc(n: int, m: int, omega: float, t: float, seed: int) -> Instance:
    """Random chance-constraint SOC instance (square ``D``, ``h = 0``)."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rngs = _streams(seed, m)
    c = rngs[0].integers(0, 100, size=n, endpoint=True).astype(float)
    cons = []
    p = density(n)
    for j in range(m):
        rng = rngs[j + 1]
        a = rng.integers(-50, 50, size=n, endpoint=True).astype(float)
        D = _sparse_nonzero(rng, (n, n), p, 20)
        b = rhs_from_tightness(a, D, omega, t)
        cons.append(SocConstraint(a, D, np.zeros(n), omega, b, "general"))
    meta = {"family": "soc-cc", "seed": int(seed), "tightness": float(t), "omega": float(omega)}
    return Instance(c, cons, meta)


def generate_soc_k(n: int, m: int, omega: float, t: float, seed: int) -> Instance:
    """Random SOC knapsack instance (nonnegative ``a`` and diagonal ``d``)."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rngs = _streams(seed, m)
    c = rngs[0].integers(0, 100, size=n, endpoint=True).astype(float)
    cons = []
    for j in range(m):
        rng = rngs[j + 1]
        a = rng.integers(0, 50, size=n, endpoint=True).astype(float)
        d = rng.integers(0, 20, size=n, endpoint=True).astype(float)
        b = rhs_from_tightness(a, np.diag(d), omega, t)
        cons.append(SocConstraint.diagonal_knapsack(a, d, omega, b))
    meta = {"family": "soc-k", "seed": int(seed), "tightness": float(t), "omega": float(omega)}
    return Instance(c, cons, meta)


def generate_linear(n: int, m: int, t: float, seed: int) -> Instance:
    """Random multi-knapsack with the same coefficient ranges (``omega = 0``)."""
    rngs = _streams(seed, m)
    c = rngs[0].integers(0, 100, size=n, endpoint=True).astype(float)
    cons = []
    for j in range(m):
        a = rngs[j + 1].integers(-50, 50, size=n, endpoint=True).astype(float)
        cons.append(SocConstraint.linear(a, rhs_from_tightness(a, np.zeros((0, n)), 0.0, t)))
    return Instance(c, cons, {"family": "linear", "seed": int(seed), "tightness": float(t)})


# text format ----------------------------------------------------------------

class InstanceParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _num(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _meta_value(v) -> str:
    if isinstance(v, bool):
        raise TypeError("boolean metadata is not supported")
    if isinstance(v, (int, float, np.integer, np.floating)):
        return repr(v) if isinstance(v, (float, np.floating)) else str(int(v))
    text = str(v)
    if not text or any(ch.isspace() for ch in text):
        raise ValueError(f"metadata value {text!r} must be a single token")
    return text


def _parse_meta(raw: str):
    # ints have no '.', floats always do (repr), anything else stays text
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def write_instance(inst: Instance) -> str:
    """Canonical text form (see the README for the grammar)."""
    out = ["bddcut-instance 1", f"n {inst.n}", f"m {inst.m}"]
    for key in sorted(inst.meta):
        out.append(f"meta {key} {_meta_value(inst.meta[key])}")
    out.append("c " + " ".join(map(_num, inst.c)))
    for j, con in enumerate(inst.constraints):
        out.append(f"constraint {j}")
        out.append(f"kind {con.kind}")
        out.append("a " + " ".join(map(_num, con.a)))
        out.append(f"l {con.l}")
        rows, cols = np.nonzero(con.D)
        out.append(f"D {len(rows)}")
        out.extend(f"{r} {k} {_num(con.D[r, k])}" for r, k in zip(rows.tolist(), cols.tolist()))
        out.append("h" + "".join(" " + _num(v) for v in con.h))
        out.append(f"omega {_num(con.omega)}")
        out.append(f"b {_num(con.b)}")
        out.append("end")
    return "\n".join(out) + "\n"


def parse_instance(text: str) -> Instance:
    lines = [(k + 1, ln.split()) for k, ln in enumerate(text.splitlines())]
    lines = [(k, t) for k, t in lines if t and not t[0].startswith("#")]
    pos = 0

    def take(keyword: str):
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 0
            raise InstanceParseError(last + 1, f"expected '{keyword}', got end of file")
        num, toks = lines[pos]
        if toks[0] != keyword:
            raise InstanceParseError(num, f"expected '{keyword}', got '{toks[0]}'")
        pos += 1
        return num, toks[1:]

    def floats(num, toks, count=None):
        try:
            vals = [float(t) for t in toks]
        except ValueError as exc:
            raise InstanceParseError(num, str(exc)) from None
        if count is not None and len(vals) != count:
            raise InstanceParseError(num, f"expected {count} values, got {len(vals)}")
        return np.array(vals, dtype=float)

    def integer(num, toks):
        if len(toks) != 1:
            raise InstanceParseError(num, "expected one integer")
        try:
            return int(toks[0])
        except ValueError as exc:
            raise InstanceParseError(num, str(exc)) from None

    num, toks = take("bddcut-instance")
    if toks != ["1"]:
        raise InstanceParseError(num, "unsupported format version")
    n = integer(*take("n"))
    m = integer(*take("m"))
    meta = {}
    while pos < len(lines) and lines[pos][1][0] == "meta":
        num, toks = take("meta")
        if len(toks) != 2:
            raise InstanceParseError(num, "meta lines are 'meta <key> <value>'")
        meta[toks[0]] = _parse_meta(toks[1])
    c = floats(*take("c"), count=n)
    cons = []
    for j in range(m):
        num, toks = take("constraint")
        if toks != [str(j)]:
            raise InstanceParseError(num, f"expected constraint index {j}")
        fields = {}
        while pos < len(lines) and lines[pos][1][0] != "end":
            num, toks = lines[pos]
            key = toks[0]
            if key in fields:
                raise InstanceParseError(num, f"constraint {j}: duplicate field '{key}'")
            pos += 1
            if key == "kind":
                if len(toks) != 2 or toks[1] not in KINDS:
                    raise InstanceParseError(num, f"constraint {j}: bad kind")
                fields[key] = toks[1]
            elif key == "a":
                fields[key] = floats(num, toks[1:], n)
            elif key == "l":
                fields[key] = integer(num, toks[1:])
            elif key == "D":
                nnz = integer(num, toks[1:])
                trip = []
                for _ in range(nnz):
                    if pos >= len(lines):
                        raise InstanceParseError(num, f"constraint {j}: truncated D triplets")
                    tnum, ttoks = lines[pos]
                    pos += 1
                    if len(ttoks) != 3:
                        raise InstanceParseError(tnum, f"constraint {j}: D triplet needs 'row col value'")
                    try:
                        trip.append((int(ttoks[0]), int(ttoks[1]), float(ttoks[2])))
                    except ValueError as exc:
                        raise InstanceParseError(tnum, str(exc)) from None
                fields[key] = (num, trip)
            elif key == "h":
                fields[key] = (num, floats(num, toks[1:]))
            elif key in ("omega", "b"):
                vals = floats(num, toks[1:], 1)
                fields[key] = float(vals[0])
            else:
                raise InstanceParseError(num, f"constraint {j}: unknown field '{key}'")
        end_num, _ = take("end")
        for key in ("kind", "a", "l", "D", "h", "omega", "b"):
            if key not in fields:
                raise InstanceParseError(end_num, f"constraint {j}: missing field '{key}'")
        l = fields["l"]
        dnum, trip = fields["D"]
        D = np.zeros((l, n))
        for r, k, v in trip:
            if not (0 <= r < l and 0 <= k < n):
                raise InstanceParseError(dnum, f"constraint {j}: D entry ({r}, {k}) out of range")
            D[r, k] = v
        hnum, h = fields["h"]
        if h.shape[0] != l:
            raise InstanceParseError(hnum, f"constraint {j}: h needs {l} values")
        try:
            cons.append(SocConstraint(fields["a"], D, h, fields["omega"], fields["b"], fields["kind"]))
        except ValueError as exc:
            raise InstanceParseError(end_num, f"constraint {j}: {exc}") from None
    if pos != len(lines):
        raise InstanceParseError(lines[pos][0], "trailing content")
    return Instance(c, cons, meta)


def read_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_instance(inst))
