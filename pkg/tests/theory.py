"""Brute-force checks of the lifting and flow properties, shared by test modules.

Each ``check_*`` function raises AssertionError with a readable message and
returns a small count so callers can report how much was exercised.
"""
from dataclasses import dataclass, field

import numpy as np

from bddcut.bdd import Bdd, path_matrix, reduce
from bddcut.compile import build_bdd
from bddcut.lifting import (MINUS, PLUS, ZERO, Inequality, d_slacks, face_dimension, lift_step,
                            min_abs_rule, sequential_lift, tight_points, tighten_rhs)
from bddcut.model import generate_linear, generate_soc_cc, generate_soc_k
from bddcut.separation import (cglp_cut, cut_to_inequality, maxflow_cap, maxflow_joint,
                               mincut_cut)

from conftest import cube, dereduce

VALID_TOL = 1e-9


def family_constraint(family: str, seed: int):
    """One seeded constraint with ``n`` in ``[4, 12]``."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 13))
    t = float(rng.choice([0.2, 0.3, 0.5]))
    if family == "linear":
        return generate_linear(n, 1, t, seed).constraints[0]
    omega = float(rng.choice([1.0, 3.0, 5.0]))
    if family == "soc-k":
        return generate_soc_k(n, 1, omega, t, seed).constraints[0]
    return generate_soc_cc(n, 1, omega, t, seed).constraints[0]


def exact_case(family: str, seed: int):
    """(constraint, exact BDD, feasible points) or None when infeasible."""
    con = family_constraint(family, seed)
    bdd = build_bdd(con)
    if bdd.is_empty:
        return None
    return con, bdd, path_matrix(bdd).astype(float)


def random_supported(bdd: Bdd, rng, low=-6, high=6) -> Inequality:
    pi = rng.integers(low, high + 1, size=bdd.n).astype(float)
    return tighten_rhs(bdd, Inequality(pi, 0.0))


def assert_valid(ineq: Inequality, pts: np.ndarray, what: str = "inequality") -> float:
    v = float((pts @ ineq.pi - ineq.pi0).max())
    assert v <= VALID_TOL, f"{what} {ineq!r} violated by {v:.3e}"
    return v


# d-slacks and lifting ---------------------------------------------------------

def brute_slacks(pts: np.ndarray, pi: np.ndarray):
    vals = pts @ pi
    n = pts.shape[1]
    l0 = np.array([vals[pts[:, i] == 0].max(initial=-np.inf) for i in range(n)])
    l1 = np.array([vals[pts[:, i] == 1].max(initial=-np.inf) for i in range(n)])
    return l0, l1


def check_slacks(bdd: Bdd, pts: np.ndarray, ineq: Inequality) -> int:
    sl = d_slacks(bdd, ineq)
    l0, l1 = brute_slacks(pts, ineq.pi)
    assert np.array_equal(np.isneginf(sl.lambda0), np.isneginf(l0))
    assert np.array_equal(np.isneginf(sl.lambda1), np.isneginf(l1))
    fin = np.isfinite(l0)
    assert np.allclose(sl.lambda0[fin], l0[fin], atol=1e-9)
    fin = np.isfinite(l1)
    assert np.allclose(sl.lambda1[fin], l1[fin], atol=1e-9)
    return bdd.n


def nonfixed_zero(sl) -> int:
    return int(((sl.tag == ZERO) & ~sl.fixed).sum())


def check_partition(bdd: Bdd, pts: np.ndarray, ineq: Inequality) -> int:
    """Tag of each non-fixed index matches the values it takes on the tight set."""
    sl = d_slacks(bdd, ineq)
    tight = tight_points(pts, ineq)
    assert tight.shape[0] > 0, "inequality does not support the point set"
    for i in np.nonzero(~sl.fixed)[0]:
        vals = set(tight[:, i].astype(int).tolist())
        want = {MINUS: {1}, PLUS: {0}, ZERO: {0, 1}}[int(sl.tag[i])]
        assert vals == want, f"index {i}: tag {sl.tag[i]} but tight values {vals}"
    return int((~sl.fixed).sum())


def check_dimension_bound(bdd: Bdd, pts: np.ndarray, ineq: Inequality) -> int:
    sl = d_slacks(bdd, ineq)
    dim = face_dimension(tight_points(pts, ineq))
    z = nonfixed_zero(sl)
    assert dim <= z, f"face dimension {dim} exceeds |S0| = {z}"
    if dim == 0:
        assert z == 0
    return 1


def violated_points(ineq: Inequality, rng, count: int) -> np.ndarray:
    """Random points of the unit cube violating ``ineq`` (empty if none exist)."""
    top = (ineq.pi > 0).astype(float)
    if ineq.violation(top) <= 1e-9:
        return np.zeros((0, ineq.n))
    out = []
    while len(out) < count:
        w = rng.random(ineq.n)
        u = rng.random()
        x = (1 - u) * w + u * top
        if ineq.violation(x) > 1e-9:
            out.append(x)
    return np.array(out)


def check_lift_step(bdd: Bdd, pts: np.ndarray, ineq: Inequality, i: int, rng,
                    samples: int = 100) -> dict:
    """One lift at index ``i``: validity, face growth and violation preservation."""
    sl = d_slacks(bdd, ineq)
    new = lift_step(ineq, i, sl)
    assert_valid(new, pts, "lifted")
    old_t, new_t = tight_points(pts, ineq), tight_points(pts, new)
    d_old, d_new = face_dimension(old_t), face_dimension(new_t)
    assert d_new >= d_old + 1, f"face dimension {d_old} -> {d_new}"
    # the old tight set stays tight
    assert np.allclose(old_t @ new.pi, new.pi0, atol=1e-9)
    X = violated_points(ineq, rng, samples)
    if X.shape[0]:
        assert np.all(X @ new.pi - new.pi0 > 0), "a violated point became satisfied"
    return {"dim": (d_old, d_new), "s0": (nonfixed_zero(sl), nonfixed_zero(d_slacks(bdd, new))),
            "points": X.shape[0]}


def strict_min(sl, i: int) -> bool:
    cand = np.nonzero((sl.tag != ZERO) & ~sl.fixed)[0]
    mags = np.abs(sl.lam[cand])
    return bool(np.sum(np.isclose(mags, abs(sl.lam[i]), rtol=0, atol=1e-9)) == 1)


@dataclass
class ChainStats:
    steps: int = 0
    strict: int = 0  # steps whose index had the unique minimum |lambda|
    tight_start: int = 0  # strict steps starting from dim F = |S0|
    jumps: list = field(default_factory=list)  # strict steps where dim grew by more than 1

    def merge(self, other: "ChainStats") -> None:
        self.steps += other.steps
        self.strict += other.strict
        self.tight_start += other.tight_start
        self.jumps.extend(other.jumps)


def check_lift_chain(bdd: Bdd, pts: np.ndarray, ineq: Inequality, rng,
                     samples: int = 100) -> ChainStats:
    """Full sequential lift checking every step.

    Strict-minimum steps must grow ``|S0|`` by exactly one.  The face
    dimension must grow by exactly one when it started equal to ``|S0|``;
    otherwise it may jump further, and such steps are collected in ``jumps``.
    """
    cur = ineq
    out = ChainStats()
    while True:
        sl = d_slacks(bdd, cur)
        if sl.is_zero():
            break
        i = min_abs_rule(sl)
        info = check_lift_step(bdd, pts, cur, i, rng, samples)
        if strict_min(sl, i):
            out.strict += 1
            (d0, d1), (z0, z1) = info["dim"], info["s0"]
            assert z1 == z0 + 1, f"strict-minimum step: |S0| {z0} -> {z1}"
            if d0 == z0:
                out.tight_start += 1
                assert d1 == d0 + 1, f"strict-minimum step from dim = |S0|: {d0} -> {d1}"
            elif d1 != d0 + 1:
                out.jumps.append((cur, i, d0, d1, z0))
        cur = lift_step(cur, i, sl)
        out.steps += 1
        assert out.steps <= bdd.n, "lifting did not terminate within n steps"
    final, rep = sequential_lift(bdd, ineq)
    assert final == cur and rep.reason == "zero-slacks"
    assert_valid(final, pts, "sequentially lifted")
    return out


# flows ----------------------------------------------------------------------

def hull_points(pts: np.ndarray, rng, count: int) -> np.ndarray:
    out = np.empty((count, pts.shape[1]))
    for k in range(count):
        m = int(rng.integers(1, min(6, pts.shape[0]) + 1))
        idx = rng.choice(pts.shape[0], size=m, replace=False)
        out[k] = rng.dirichlet(np.ones(m)) @ pts[idx]
    return out


def constraint_violators(con, rng, count: int, tries: int = 20000) -> np.ndarray:
    """Fractional points of the cube violating the continuous constraint.

    These lie outside the hull of the feasible binary points, because the
    constraint's region is convex and contains that hull.
    """
    out = []
    for _ in range(tries):
        x = rng.random(con.n)
        if rng.random() < 0.5:
            x = np.round(x * 4) / 4
        if con.lhs(x) > con.b + 1e-6:
            out.append(x)
            if len(out) == count:
                break
    return np.array(out).reshape(-1, con.n)


def check_cuts_valid(bdd: Bdd, pts: np.ndarray, x: np.ndarray) -> int:
    """Every cut family, with and without lifting, at ``x``; returns the number checked."""
    checked = 0
    for cut in (mincut_cut(bdd, x), cglp_cut(bdd, x)):
        if cut is None:
            continue
        assert float((cut.lhs(pts)).min()) >= 1 - VALID_TOL, f"{cut.family} cut lhs < 1"
        q = cut_to_inequality(cut)
        assert_valid(q, pts, f"{cut.family} cut")
        q = tighten_rhs(bdd, q)
        assert_valid(q, pts, f"tightened {cut.family} cut")
        lifted, _ = sequential_lift(bdd, q)
        assert_valid(lifted, pts, f"lifted {cut.family} cut")
        checked += 3
    return checked


def check_binary_separation(bdd: Bdd, pts: np.ndarray) -> int:
    """Every binary point outside the path set is cut off by a min-cut cut."""
    inside = {tuple(p) for p in pts.astype(int).tolist()}
    count = 0
    for y in cube(bdd.n):
        if tuple(y.tolist()) in inside:
            continue
        x = y.astype(float)
        assert maxflow_cap(bdd, x).value < 1 - 1e-9
        cut = mincut_cut(bdd, x)
        assert cut is not None and cut.violation(x) > 1 - 1e-9
        assert float(cut.lhs(pts).min()) >= 1 - VALID_TOL
        count += 1
    return count


def check_reduced_monotone(bdd: Bdd, rng, pairs: int, points: int = 5) -> int:
    """Count only pairs where de-reduction actually added nodes."""
    r = reduce(bdd)
    done = 0
    for _ in range(4 * pairs):
        if done == pairs:
            break
        twin = dereduce(r, rng, splits=int(rng.integers(2, 8)))
        if twin.num_nodes == r.num_nodes:
            continue
        for x in rng.random((points, bdd.n)):
            vr = maxflow_cap(r, x).value
            vt = maxflow_cap(twin, x).value
            assert vr <= vt + 1e-9, f"reduced value {vr} exceeds {vt}"
            assert maxflow_joint(r, x).value <= vr + 1e-9
        done += 1
    return done
