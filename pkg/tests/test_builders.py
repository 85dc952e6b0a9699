import math

import numpy as np
import pytest

from limitperiodic.builders import (
    ac_stage,
    audit_state,
    build_ac,
    build_cantor,
    cantor_stage,
    gap_persistence_check,
    holder_check,
    inflate_stage,
    stage_gap_counts,
    start_construction,
)
from limitperiodic.floquet import FiniteVector
from limitperiodic.gaps import verify_certificate, perturbed
from limitperiodic.odometer import sampling_function


@pytest.fixture(scope="module")
def cantor3():
    f0 = sampling_function([2, 4, 8, 16], 1, [0.0, 0.0])
    return build_cantor(f0, 0.5, 3)


@pytest.fixture(scope="module")
def ac2():
    f0 = sampling_function([2, 4, 8], 1, [0.0, 0.0])
    return build_ac(f0, 0.5, FiniteVector.delta(0), 1.5, 2)


def test_first_stage_matches_gap_opening():
    f0 = sampling_function([2, 4], 1, [0.0, 0.0])
    s = cantor_stage(start_construction(f0, 0.5))
    assert np.array_equal(s.f(0).values, [0, 1 / 11])


def test_second_stage_budget():
    f0 = sampling_function([2, 4], 1, [0.0, 0.0])
    s = build_cantor(f0, 0.5, 1)
    assert s.f().period == 4 and s.bands().n_open == 3
    alpha0 = s.alpha(0)
    assert s.stages[1].norm < min(0.5 / 2, alpha0 / 6)


def test_build_cantor_k0():
    f0 = sampling_function([2, 4], 1, [0.0, 0.0])
    s = build_cantor(f0, 0.5, 0)
    assert len(s.stages) == 1 and stage_gap_counts(s) == [1]


def test_cantor_gap_counts_and_audit(cantor3):
    assert stage_gap_counts(cantor3) == [1, 3, 7, 15]
    report = audit_state(cantor3)
    assert report.passed, report.failures()
    checks = {r[0] for r in report.rows}
    assert {"choice4", "choice5", "choice6", "telescoping", "nesting", "total"} <= checks
    assert cantor3.f().distance(cantor3.f0) < 0.5


def test_stage_certificates_revalidate(cantor3):
    for k, rec in enumerate(cantor3.stages):
        prev = (cantor3.f(k - 1) if k else cantor3.f0).embed(rec.level)
        assert verify_certificate(prev, cantor3.f(k), rec.certificate)


def test_stage_levels_advance(cantor3):
    assert [r.level for r in cantor3.stages] == [1, 2, 3, 4]
    with pytest.raises(ValueError):
        cantor_stage(cantor3)


@pytest.mark.parametrize("eps", [0.5, 0.05, 0.005])
def test_budgets_scale_with_eps(eps):
    f0 = sampling_function([2, 4, 8], 1, [0.0, 0.0])
    s = build_cantor(f0, eps, 2)
    assert audit_state(s).passed
    assert s.stages[0].budget == eps


def test_cantor_from_random_seed():
    rng = np.random.default_rng(3)
    f0 = sampling_function([3, 6, 12], 1, rng.uniform(-1, 1, 3))
    s = build_cantor(f0, 0.3, 2)
    assert stage_gap_counts(s) == [2, 5, 11]
    assert audit_state(s).passed and gap_persistence_check(s).passed


def test_gap_persistence(cantor3):
    rep = gap_persistence_check(cantor3)
    assert rep.passed and rep.checked == 1 + 3 + 7


def test_gap_persistence_single_stage_vacuous():
    f0 = sampling_function([2, 4], 1, [0.0, 0.0])
    rep = gap_persistence_check(build_cantor(f0, 0.5, 0))
    assert rep.passed and rep.checked == 0


def test_inflated_stage_fails_audit_and_persistence(cantor3):
    bad = inflate_stage(cantor3, 1, 0.2)
    assert audit_state(bad).failed("choice5")
    assert not gap_persistence_check(bad).passed
    # the original is untouched
    assert audit_state(cantor3).passed


def test_log_contains_stage_data(cantor3):
    log = cantor3.to_dict()
    assert len(log["stages"]) == 4
    st = log["stages"][2]
    assert len(st["f"]) == 8 and len(st["gaps"]) == 7 and st["certificate"]["M"] > 0


def test_ac_distances_and_audit(ac2):
    state, summary = ac2
    for k, rec in enumerate(state.stages):
        assert rec.distance <= 2.0**-k
    assert sum(summary.distances) <= 2
    assert audit_state(state).passed
    assert stage_gap_counts(state) == [1, 3, 7]
    assert math.isfinite(summary.Q) and summary.Q > 0
    assert summary.exponent == pytest.approx(1 / 3)


def test_ac_holder_modulus_dominates(ac2):
    state, summary = ac2
    bands = state.bands().bands
    sets = [[(lo, lo + 1e-4)] for lo, _ in bands[:3]] + [[(bands[0][0], bands[0][0] + 1e-3)]]
    for mass, mod, mod_lin in holder_check(state, summary, sets):
        assert mass <= mod
        assert mass <= mod_lin


def test_ac_zero_vector_distances_vanish():
    f0 = sampling_function([2, 4], 1, [0.0, 0.0])
    state, summary = build_ac(f0, 0.5, FiniteVector.zero(), 1.5, 1)
    assert all(rec.distance == 0 for rec in state.stages)
    assert summary.Q == 0


def test_ac_halving_shrinks_distance():
    # tiny amplitudes give small density distances (continuity)
    f0 = sampling_function([2, 4], 1, [0.0, 0.0])
    state = ac_stage(start_construction(f0, 0.5, "ac", FiniteVector.delta(0), 1.5))
    from limitperiodic.floquet import lt_distance

    base = state.f(0)
    fine = base.embed(2)
    ds = [lt_distance(base.values, perturbed(fine, 3, a).values, FiniteVector.delta(0), 1.5) for a in (1e-2, 1e-4, 1e-6)]
    assert ds[0] > ds[1] > ds[2]


def test_ac_mode_validation():
    f0 = sampling_function([2], 1, [0.0, 0.0])
    with pytest.raises(ValueError):
        start_construction(f0, 0.5, "ac", FiniteVector.delta(0), 2.5)
    with pytest.raises(ValueError):
        start_construction(f0, 0.5, "ac")
    with pytest.raises(ValueError):
        ac_stage(start_construction(f0, 0.5))
    with pytest.raises(ValueError):
        start_construction(f0, -1.0)
