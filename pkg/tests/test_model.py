import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bddcut.model import (Instance, InstanceParseError, SocConstraint, density, evaluate,
                          generate_linear, generate_soc_cc, generate_soc_k, parse_instance,
                          read_instance, rhs_from_tightness, save_instance, write_instance)


def test_soc3_infeasible_point(soc3):
    # 3 + 1 + sqrt(2^2 + 7^2)
    assert evaluate(soc3, [1, 1, 0]) == pytest.approx(4 + math.sqrt(53))
    assert not soc3.is_feasible([1, 1, 0])
    assert soc3.is_feasible([0, 0, 0])


def test_batch_matches_single(soc3):
    pts = np.array([[0, 0, 0], [1, 0, 1], [1, 1, 1]])
    batch = evaluate(soc3, pts)
    assert batch.shape == (3,)
    for p, v in zip(pts, batch):
        assert evaluate(soc3, p) == v


def test_linear_and_knapsack_kinds():
    lin = SocConstraint.linear([7, 5, 4, 1], 8)
    assert lin.l == 0 and lin.kind == "linear"
    assert evaluate(lin, [1, 0, 0, 1]) == 8
    k = SocConstraint.diagonal_knapsack([1, 2], [3, 4], 2.0, 10)
    # binary x: norm^2 = sum d_i^2 x_i
    assert evaluate(k, [1, 1]) == pytest.approx(3 + 2 * 5)


@pytest.mark.parametrize("kwargs", [
    dict(a=[1, 2], D=[[1, 0]], h=[0, 0], omega=1, b=1),
    dict(a=[1, 2], D=[[1, 0]], h=[0], omega=-1, b=1),
    dict(a=[1, 2], D=[[1, 0]], h=[0], omega=1, b=1, kind="linear"),
    dict(a=[1, 2], D=[[1, 1], [0, 1]], h=[0, 0], omega=1, b=1, kind="diagonal-knapsack"),
    dict(a=[1, 2], D=[[1, 0]], h=[0], omega=1, b=1, kind="weird"),
])
def test_constraint_validation(kwargs):
    with pytest.raises(ValueError):
        SocConstraint(**kwargs)


def test_dimension_mismatch(soc3):
    with pytest.raises(ValueError):
        evaluate(soc3, [1, 0])
    with pytest.raises(ValueError):
        Instance([1, 2], [soc3])


def test_tightness_formula():
    a = np.array([3.0, -2.0, 5.0])
    D = np.array([[1.0, -4.0, 2.0], [0.0, 0.0, -1.0]])
    # rows: max(3, 4) = 4 and max(0, 1) = 1
    assert rhs_from_tightness(a, D, 2.0, 0.5) == pytest.approx(0.5 * (8 + 2 * math.sqrt(17)))
    assert rhs_from_tightness(a, np.zeros((0, 3)), 0.0, 1.0) == 8


def test_density():
    assert density(1) == 1.0 and density(4) == 1.0
    assert density(16) == 0.5


class TestGenerators:
    def test_soc_cc_shape_and_ranges(self):
        inst = generate_soc_cc(15, 2, 3.0, 0.2, seed=7)
        assert (inst.n, inst.m) == (15, 2)
        assert inst.c.min() >= 0 and inst.c.max() <= 100
        for con in inst.constraints:
            assert con.D.shape == (15, 15) and not con.h.any()
            assert np.abs(con.a).max() <= 50
            nz = np.abs(con.D[con.D != 0])
            assert nz.min() >= 1 and nz.max() <= 20
            assert con.b == pytest.approx(rhs_from_tightness(con.a, con.D, 3.0, 0.2))
        assert inst.meta == {"family": "soc-cc", "seed": 7, "tightness": 0.2, "omega": 3.0}

    def test_soc_k(self):
        inst = generate_soc_k(10, 3, 1.0, 0.3, seed=1)
        for con in inst.constraints:
            assert con.kind == "diagonal-knapsack"
            assert con.a.min() >= 0 and np.diag(con.D).min() >= 0

    def test_linear(self):
        inst = generate_linear(8, 2, 0.5, seed=3)
        assert all(c.kind == "linear" for c in inst.constraints)

    def test_deterministic(self):
        assert generate_soc_cc(12, 2, 1.0, 0.1, 5) == generate_soc_cc(12, 2, 1.0, 0.1, 5)
        assert generate_soc_cc(12, 2, 1.0, 0.1, 5) != generate_soc_cc(12, 2, 1.0, 0.1, 6)

    def test_streams_independent_of_m(self):
        # constraint j only depends on its own stream
        one = generate_soc_k(9, 1, 1.0, 0.2, 11)
        two = generate_soc_k(9, 2, 1.0, 0.2, 11)
        assert np.array_equal(one.c, two.c)
        assert one.constraints[0] == two.constraints[0]

    def test_bad_sizes(self):
        with pytest.raises(ValueError):
            generate_soc_cc(0, 1, 1.0, 0.1, 0)


class TestFormat:
    def test_round_trip_exact(self, soc3):
        inst = Instance([1, 2, 3], [soc3, SocConstraint.linear([1, 1, 1], 2)], {"tag": "ex5"})
        text = write_instance(inst)
        again = parse_instance(text)
        assert again == inst
        x = np.array([[1, 0, 1], [0, 1, 1]])
        assert np.array_equal(evaluate(again.constraints[0], x), evaluate(soc3, x))
        assert write_instance(again) == text

    def test_generated_round_trip(self, tmp_path):
        inst = generate_soc_cc(10, 2, 5.0, 0.3, seed=2)
        path = tmp_path / "i.txt"
        save_instance(inst, path)
        assert read_instance(path) == inst

    def test_comments_and_blank_lines(self, soc3):
        text = write_instance(Instance([1, 1, 1], [soc3]))
        noisy = "# header\n\n" + text.replace("\nc ", "\n# the objective\nc ")
        assert parse_instance(noisy) == Instance([1, 1, 1], [soc3])

    @pytest.mark.parametrize("mutate, line", [
        (lambda t: t.replace("bddcut-instance 1", "bddcut-instance 2"), 1),
        (lambda t: t.replace("n 3", "n x"), 2),
        (lambda t: t.replace("c 1 1 1", "c 1 1"), 4),
        (lambda t: t.replace("omega 1\n", ""), None),
        (lambda t: t + "extra\n", None),
    ])
    def test_errors_carry_line(self, soc3, mutate, line):
        text = mutate(write_instance(Instance([1, 1, 1], [soc3])))
        with pytest.raises(InstanceParseError) as err:
            parse_instance(text)
        if line is not None:
            assert err.value.line == line
        assert str(err.value).startswith("line ")

    def test_d_entry_out_of_range(self, soc3):
        text = write_instance(Instance([1, 1, 1], [soc3])).replace("\n1 2 -1\n", "\n5 2 -1\n")
        with pytest.raises(InstanceParseError, match="out of range"):
            parse_instance(text)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(1, 3), st.sampled_from([0.0, 1.0, 2.5]),
       st.floats(0.05, 0.9), st.integers(0, 2**32 - 1))
def test_round_trip_property(n, m, omega, t, seed):
    inst = generate_soc_cc(n, m, omega, t, seed)
    assert parse_instance(write_instance(inst)) == inst
