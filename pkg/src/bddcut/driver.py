"""Root-node cutting-plane loop, brute-force oracle and cut verification."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .bdd import Bdd
from .compile import BuildConfig, build_bdd
from .lifting import Inequality, sequential_lift, tighten_rhs
from .lp import LE, LpProblem, solve
from .model import Instance
from .separation import EMIT_TOL, PathPool, cglp_cut, cut_to_inequality, mincut_cut

VARIANTS = ("none", "flow", "flow+lift", "cglp", "cglp+lift")
ORACLE_MAX_N = 22
VERIFY_TOL = 1e-9


@dataclass(frozen=True)
class LoopConfig:
    variant: str = "flow"
    max_rounds: int = 1000
    tol: float = EMIT_TOL
    build: BuildConfig = field(default_factory=BuildConfig)
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    @property
    def lift(self) -> bool:
        return self.variant.endswith("+lift")

    @property
    def uses_cglp(self) -> bool:
        return self.variant.startswith("cglp")


@dataclass
class CutRecord:
    round: int
    bdd: int
    family: str  # "flow" or "cglp"
    inequality: Inequality
    lifted: bool
    violation: float


@dataclass
class RootReport:
    variant: str
    initial_bound: float = float("nan")
    final_bound: float = float("nan")
    bounds: list[float] = field(default_factory=list)
    cuts: list[CutRecord] = field(default_factory=list)
    status: str = ""  # converged | max_rounds | lp_failure
    optimum: float | None = None
    wall_time: float = 0.0
    x: np.ndarray | None = None

    @property
    def valid(self) -> bool:
        return self.status in ("converged", "max_rounds")

    @property
    def rounds(self) -> int:
        return len(self.bounds)

    def cut_counts(self) -> dict[str, int]:
        out = {"flow": 0, "cglp": 0}
        for c in self.cuts:
            out[c.family] += 1
        return out

    @property
    def lift_fraction(self) -> float:
        """Share of cuts whose coefficients changed under lifting."""
        if not self.cuts:
            return 0.0
        return sum(c.lifted for c in self.cuts) / len(self.cuts)

    @property
    def gap(self) -> float | None:
        if self.optimum is None:
            return None
        return root_gap(self.final_bound, self.optimum)

    def inequalities(self) -> list[Inequality]:
        return [c.inequality for c in self.cuts]

    def summary(self) -> dict:
        counts = self.cut_counts()
        return {
            "variant": self.variant,
            "status": self.status,
            "rounds": self.rounds,
            "initial_bound": self.initial_bound,
            "final_bound": self.final_bound,
            "optimum": self.optimum,
            "gap": self.gap,
            "flow_cuts": counts["flow"],
            "cglp_cuts": counts["cglp"],
            "lift_fraction": self.lift_fraction,
            "wall_time": self.wall_time,
        }

    def to_text(self) -> str:
        return "".join(f"{k}: {v}\n" for k, v in self.summary().items())

    def rounds_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "bound", "bdd", "family", "lifted", "violation"])
        by_round = {c.round: c for c in self.cuts}
        for r, bound in enumerate(self.bounds):
            c = by_round.get(r)
            w.writerow([r, repr(bound)] + ([c.bdd, c.family, int(c.lifted), repr(c.violation)]
                                           if c else ["", "", "", ""]))
        return buf.getvalue()


def root_gap(bound: float, optimum: float) -> float:
    return (bound - optimum) / max(1.0, abs(optimum))


def build_bdds(inst: Instance, cfg: BuildConfig | None = None) -> list[Bdd]:
    return [build_bdd(con, cfg) for con in inst.constraints]


def _solve_relaxation(c: np.ndarray, cuts: list[Inequality]):
    n = c.size
    A = np.array([q.pi for q in cuts]).reshape(-1, n)
    b = np.array([q.pi0 for q in cuts])
    return solve(LpProblem(c, A, [LE] * len(cuts), b, np.zeros(n), np.ones(n), "max"))


def _try_cut(bdd: Bdd, j: int, family: str, x: np.ndarray, cfg: LoopConfig,
             pool: PathPool, rnd: int) -> CutRecord | None:
    if family == "flow":
        cut = mincut_cut(bdd, x, cfg.tol)
    else:
        cut = cglp_cut(bdd, x, cfg.tol, pool=pool)
    if cut is None:
        return None
    ineq = tighten_rhs(bdd, cut_to_inequality(cut))
    lifted = False
    if cfg.lift:
        new, _ = sequential_lift(bdd, ineq)
        lifted = not np.array_equal(new.pi, ineq.pi)
        ineq = new
    viol = float(ineq.violation(x))
    if viol <= cfg.tol:
        return None
    return CutRecord(rnd, j, family, ineq, lifted, viol)


def root_loop(inst: Instance, cfg: LoopConfig | None = None,
              bdds: list[Bdd] | None = None, optimum: float | None = None) -> RootReport:
    """Cutting-plane loop over ``[0, 1]^n`` with one cut per round.

    BDDs are scanned round-robin starting after the one that produced the
    previous cut, first for min-cut cuts and then, for the cglp variants,
    for joint-model cuts.  Cuts get their right-hand side tightened over
    the producing BDD and are lifted against it for the ``+lift`` variants.
    """
    cfg = cfg or LoopConfig()
    start = time.perf_counter()
    if bdds is None:
        bdds = build_bdds(inst, cfg.build)
    if any(b.is_empty for b in bdds):
        raise ValueError("an instance constraint compiles to the empty set")
    report = RootReport(cfg.variant, optimum=optimum)
    c = np.asarray(inst.c, dtype=float)
    cuts: list[Inequality] = []
    pools = [PathPool(b) for b in bdds]
    nxt = 0
    for rnd in range(cfg.max_rounds):
        sol = _solve_relaxation(c, cuts)
        if not sol.optimal:
            report.status = "lp_failure"
            break
        x = np.clip(sol.x, 0.0, 1.0)
        report.bounds.append(float(sol.objective))
        report.x = x
        if rnd == 0:
            report.initial_bound = float(sol.objective)
        report.final_bound = float(sol.objective)
        if cfg.variant == "none":
            report.status = "converged"
            break
        record = None
        order = [(nxt + k) % len(bdds) for k in range(len(bdds))]
        families = ["flow", "cglp"] if cfg.uses_cglp else ["flow"]
        for family in families:
            for j in order:
                record = _try_cut(bdds[j], j, family, x, cfg, pools[j], rnd)
                if record is not None:
                    nxt = j + 1
                    break
            if record is not None:
                break
        if record is None:
            report.status = "converged"
            break
        report.cuts.append(record)
        cuts.append(record.inequality)
    else:
        report.status = "max_rounds"
    report.wall_time = time.perf_counter() - start
    return report


# oracle ---------------------------------------------------------------------

def all_points(n: int, chunk: int = 1 << 16):
    """Yield ``{0,1}^n`` in lexicographic order as uint8 blocks."""
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    for lo in range(0, total, chunk):
        ids = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
        yield ((ids[:, None] >> shifts) & 1).astype(np.uint8)


def feasible_points(inst: Instance) -> np.ndarray:
    if inst.n > ORACLE_MAX_N:
        raise ValueError(f"enumeration is limited to n <= {ORACLE_MAX_N}")
    parts = [blk[np.asarray(inst.is_feasible(blk), dtype=bool)] for blk in all_points(inst.n)]
    return np.vstack(parts) if parts else np.zeros((0, inst.n), dtype=np.uint8)


def oracle(inst: Instance) -> tuple[np.ndarray, float | None]:
    """All feasible binary points and the optimum (None when infeasible)."""
    pts = feasible_points(inst)
    if pts.shape[0] == 0:
        return pts, None
    return pts, float((pts @ np.asarray(inst.c, dtype=float)).max())


class CutVerificationError(AssertionError):
    def __init__(self, index: int, cut: Inequality, point: np.ndarray, violation: float):
        super().__init__(f"cut {index} ({cut!r}) is violated by feasible point "
                         f"{point.tolist()} by {violation:.3e}")
        self.index = index
        self.cut = cut
        self.point = point
        self.violation = violation


@dataclass
class VerifyReport:
    num_cuts: int
    num_points: int
    max_violation: float


def verify_cuts(cuts, inst: Instance | None = None, points: np.ndarray | None = None,
                tol: float = VERIFY_TOL) -> VerifyReport:
    """Check every cut against every feasible point; raise on the first failure."""
    if points is None:
        if inst is None:
            raise ValueError("need an instance or a point set")
        points = feasible_points(inst)
    P = np.asarray(points, dtype=float)
    worst = -np.inf
    for k, q in enumerate(cuts):
        if P.shape[0] == 0:
            break
        v = P @ q.pi - q.pi0
        j = int(np.argmax(v))
        if v[j] > tol:
            raise CutVerificationError(k, q, P[j], float(v[j]))
        worst = max(worst, float(v[j]))
    return VerifyReport(len(cuts), P.shape[0], float(worst) if np.isfinite(worst) else 0.0)

