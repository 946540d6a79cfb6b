import itertools
import sys

import numpy as np
import pytest

from bddcut.bdd import Bdd
from bddcut.model import SocConstraint


def cube(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)


def brute_feasible(con: SocConstraint) -> np.ndarray:
    pts = cube(con.n)
    return pts[np.asarray(con.is_feasible(pts), dtype=bool)]


def point_set(rows) -> set:
    return {tuple(int(v) for v in r) for r in rows}


def knap_b1() -> Bdd:
    # r=0 | u1=1 u2=2 | u3=3 u4=4 | u5=5 | t=6
    arcs = [(0, 1, 0), (0, 2, 1), (1, 3, 0), (1, 4, 1), (2, 4, 0),
            (3, 5, 0), (3, 5, 1), (4, 5, 0), (5, 6, 0), (5, 6, 1)]
    return Bdd.from_arcs(4, [1, 2, 2, 1, 1], arcs)


def knap_b2() -> Bdd:
    # r=0 | u1'=1 u2'=2 | u3'=3 u4'=4 u5'=5 | u6'=6 | t=7
    arcs = [(0, 1, 0), (0, 2, 1), (1, 3, 0), (1, 4, 1), (2, 5, 0),
            (3, 6, 0), (3, 6, 1), (4, 6, 0), (5, 6, 0), (6, 7, 0), (6, 7, 1)]
    return Bdd.from_arcs(4, [1, 2, 3, 1, 1], arcs)


def layer_tables(bdd: Bdd) -> list[np.ndarray]:
    off = bdd.layer_offsets
    out = []
    for i in range(bdd.n):
        kids = bdd.children[off[i]:off[i + 1]]
        out.append(np.where(kids >= 0, kids - off[i + 1], -1))
    return out


def dereduce(bdd: Bdd, rng: np.random.Generator, splits: int = 3) -> Bdd:
    """Same path set, more nodes: copy a node and move part of its in-arcs to the copy."""
    tables = layer_tables(bdd)
    for _ in range(splits):
        i = int(rng.integers(1, bdd.n))  # layer of the copied node
        parents = tables[i - 1]
        u = int(rng.integers(tables[i].shape[0]))
        refs = np.argwhere(parents == u)
        if len(refs) < 2:
            continue
        new = tables[i].shape[0]
        tables[i] = np.vstack([tables[i], tables[i][u]])
        for r, v in refs[rng.permutation(len(refs))[: len(refs) // 2]]:
            parents[r, v] = new
    return Bdd.from_layers(bdd.n, tables)


@pytest.fixture
def b1() -> Bdd:
    return knap_b1()


@pytest.fixture
def b2() -> Bdd:
    return knap_b2()


@pytest.fixture
def knap4() -> SocConstraint:
    return SocConstraint.linear([7, 5, 4, 1], 8)


@pytest.fixture
def knap3() -> SocConstraint:
    return SocConstraint.linear([5, 2, 3], 6)


@pytest.fixture
def soc3() -> SocConstraint:
    return SocConstraint([3, 1, 1], [[1, 1, 2], [1, 3, -1]], [0, -3], 1.0, 8.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        verdict, detail = results[k]
        terminalreporter.write_line(f"criterion {k}: {verdict} - {detail}")
