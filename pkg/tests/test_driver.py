import numpy as np
import pytest

from bddcut.compile import BuildConfig
from bddcut.driver import (VARIANTS, CutVerificationError, LoopConfig, all_points, build_bdds,
                           feasible_points, oracle, root_gap, root_loop, verify_cuts)
from bddcut.lifting import Inequality
from bddcut.model import Instance, SocConstraint, generate_soc_cc, generate_soc_k

from conftest import cube


@pytest.fixture
def knap_instance(knap4):
    return Instance([7, 5, 4, 1], [knap4])


@pytest.mark.parametrize("variant, bound", [
    ("none", 17), ("flow", 9), ("flow+lift", 8), ("cglp", 8), ("cglp+lift", 8),
])
def test_knapsack_bounds(knap_instance, variant, bound):
    rep = root_loop(knap_instance, LoopConfig(variant=variant), optimum=8)
    assert rep.status == "converged"
    assert rep.final_bound == pytest.approx(bound, abs=1e-6)
    assert rep.initial_bound == pytest.approx(17)
    verify_cuts(rep.inequalities(), knap_instance)


def test_bounds_monotone_and_one_cut_per_round(knap_instance):
    rep = root_loop(knap_instance, LoopConfig(variant="flow"))
    assert all(b1 >= b2 - 1e-9 for b1, b2 in zip(rep.bounds, rep.bounds[1:]))
    assert len(rep.cuts) == rep.rounds - 1
    assert [c.round for c in rep.cuts] == list(range(len(rep.cuts)))


def test_report_fields(knap_instance):
    rep = root_loop(knap_instance, LoopConfig(variant="cglp+lift"), optimum=8)
    s = rep.summary()
    assert s["variant"] == "cglp+lift" and s["gap"] == pytest.approx(0, abs=1e-6)
    assert s["flow_cuts"] + s["cglp_cuts"] == len(rep.cuts)
    assert 0 <= rep.lift_fraction <= 1
    text = rep.to_text()
    assert "final_bound:" in text and "status: converged" in text
    csv_lines = rep.rounds_csv().splitlines()
    assert csv_lines[0] == "round,bound,bdd,family,lifted,violation"
    assert len(csv_lines) == rep.rounds + 1


def test_lift_fraction_counts_strict_changes(knap_instance):
    rep = root_loop(knap_instance, LoopConfig(variant="flow+lift"))
    plain = root_loop(knap_instance, LoopConfig(variant="flow"))
    assert rep.lift_fraction > 0
    assert plain.lift_fraction == 0


def test_max_rounds_status(knap_instance):
    rep = root_loop(knap_instance, LoopConfig(variant="flow", max_rounds=1))
    assert rep.status == "max_rounds" and rep.rounds == 1


def test_empty_constraint_rejected():
    inst = Instance([1, 1], [SocConstraint.linear([1, 1], -1)])
    with pytest.raises(ValueError):
        root_loop(inst, LoopConfig(variant="flow"))


@pytest.mark.parametrize("kw", [dict(variant="gomory"), dict(max_rounds=0), dict(tol=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        LoopConfig(**kw)


def test_config_properties():
    assert LoopConfig(variant="cglp+lift").lift and LoopConfig(variant="cglp+lift").uses_cglp
    assert not LoopConfig(variant="flow").lift
    assert not LoopConfig(variant="flow+lift").uses_cglp
    assert VARIANTS[0] == "none"


def test_root_gap():
    assert root_gap(110, 100) == pytest.approx(0.1)
    assert root_gap(0.5, 0.0) == 0.5  # denominator floored at 1
    assert root_gap(-90, -100) == pytest.approx(0.1)


def test_all_points_order():
    pts = np.vstack(list(all_points(3, chunk=3)))
    assert np.array_equal(pts, cube(3))


def test_oracle(knap4):
    inst = Instance([7, 5, 4, 1], [knap4])
    pts, opt = oracle(inst)
    assert pts.shape == (8, 4) and opt == 8
    infeasible = Instance([1, 1], [SocConstraint.linear([1, 1], -1)])
    assert oracle(infeasible)[1] is None


def test_oracle_size_guard():
    inst = Instance(np.ones(30), [SocConstraint.linear(np.ones(30), 3)])
    with pytest.raises(ValueError):
        feasible_points(inst)


def test_verify_cuts(knap_instance):
    rep = verify_cuts([Inequality([1, 1, 0, 0], 1)], knap_instance)
    assert rep.num_cuts == 1 and rep.num_points == 8 and rep.max_violation == 0
    with pytest.raises(CutVerificationError) as err:
        verify_cuts([Inequality([1, 1, 0, 0], 1), Inequality([1, 0, 0, 1], 1)], knap_instance)
    assert err.value.index == 1
    assert err.value.violation == pytest.approx(1)
    with pytest.raises(ValueError):
        verify_cuts([])


def test_multi_constraint_round_robin():
    inst = generate_soc_k(10, 3, 2.0, 0.3, seed=4)
    bdds = build_bdds(inst)
    pts, opt = oracle(inst)
    for variant in ("flow", "cglp"):
        rep = root_loop(inst, LoopConfig(variant=variant), bdds=bdds, optimum=opt)
        assert rep.valid
        assert rep.final_bound >= opt - 1e-6
        verify_cuts(rep.inequalities(), points=pts)
        assert {c.bdd for c in rep.cuts} <= {0, 1, 2}


def test_relaxed_bdds_stay_valid():
    inst = generate_soc_cc(11, 2, 3.0, 0.2, seed=8)
    pts, opt = oracle(inst)
    cfg = LoopConfig(variant="cglp+lift", build=BuildConfig(max_width=3))
    rep = root_loop(inst, cfg, optimum=opt)
    assert rep.valid and rep.final_bound >= opt - 1e-6
    verify_cuts(rep.inequalities(), points=pts)
