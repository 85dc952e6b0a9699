import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from limitperiodic.odometer import (
    GroupElement,
    Potential,
    SamplingFunction,
    as_values,
    distinct_hull_points,
    hull_points,
    is_minimal,
    make_chain,
    periodize,
    sample_potential,
    sampling_function,
    scale,
    translate,
)


def test_make_chain_valid():
    assert make_chain([2, 4, 8]).periods == (2, 4, 8)
    assert make_chain([1, 1, 2]).depth == 3


def test_make_chain_rejects_non_divisible():
    with pytest.raises(ValueError, match="3 not divisible by 2"):
        make_chain([2, 3])


@pytest.mark.parametrize("bad", [[], [0, 2], [-1]])
def test_make_chain_rejects_bad_periods(bad):
    with pytest.raises(ValueError):
        make_chain(bad)


def test_element_compatibility_enforced():
    chain = make_chain([2, 4])
    with pytest.raises(ValueError):
        GroupElement(chain, (0, 1))
    assert GroupElement(chain, (1, 3)).residue(2) == 3


def test_translate_examples():
    chain = make_chain([2, 4, 8])
    alpha = chain.adding_machine()
    zero = chain.zero()
    assert translate(zero, alpha, 1).residues == (1, 1, 1)
    assert translate(zero, alpha, 4).residues == (0, 0, 4)
    omega = chain.element(5)
    assert translate(omega, alpha, 0) == omega


def test_translate_chain_mismatch():
    with pytest.raises(ValueError):
        translate(make_chain([2]).zero(), make_chain([3]).adding_machine())


@given(m=st.integers(-50, 50), n=st.integers(-50, 50), r=st.integers(0, 23), a=st.integers(0, 23))
def test_translate_is_additive(m, n, r, a):
    chain = make_chain([2, 6, 24])
    omega, alpha = chain.element(r), chain.element(a)
    assert translate(translate(omega, alpha, m), alpha, n) == translate(omega, alpha, m + n)


def test_is_minimal_examples():
    c = make_chain([2, 4, 8])
    assert is_minimal(c, c.adding_machine())
    c = make_chain([2, 4])
    assert not is_minimal(c, GroupElement(c, (0, 2)))
    c = make_chain([3, 9])
    alpha = GroupElement(c, (2, 2))
    assert is_minimal(c, alpha)
    # brute-force orbit oracle
    orbit = {translate(c.zero(), alpha, n).residue(2) for n in range(9)}
    assert orbit == set(range(9))


@given(a=st.integers(0, 35))
def test_minimal_iff_orbit_covers(a):
    c = make_chain([2, 6, 36])
    alpha = c.element(a)
    orbit = {translate(c.zero(), alpha, n).residue(3) for n in range(36)}
    assert is_minimal(c, alpha) == (len(orbit) == 36)


def test_sample_potential_examples():
    f = sampling_function([2, 4], 1, [3.0, 7.0])
    V = sample_potential(f)
    assert list(V.sequence(0, 6)) == [3, 7, 3, 7, 3, 7]
    f = sampling_function([2, 4], 2, [1, 2, 3, 4])
    assert list(sample_potential(f).values) == [1, 2, 3, 4]
    omega = GroupElement(f.chain, (1, 1))
    assert list(sample_potential(f, omega).values) == [2, 3, 4, 1]


def test_sample_potential_window_and_provenance():
    f = sampling_function([2, 4], 2, [1, 2, 3, 4])
    V = sample_potential(f, window=(-2, 3))
    assert V.provenance["window"]["values"] == [3, 4, 1, 2, 3]
    assert V.provenance["level"] == 2


def test_sample_potential_requires_minimal_alpha():
    f = sampling_function([2, 4], 2, [1, 2, 3, 4])
    with pytest.raises(ValueError, match="not minimal"):
        sample_potential(f, alpha=GroupElement(f.chain, (0, 2)))


@given(a=st.sampled_from([1, 3, 5, 7]), r=st.integers(0, 7))
def test_sample_potential_is_permutation(a, r):
    chain = make_chain([2, 8])
    f = SamplingFunction(chain, 2, np.arange(8.0) ** 2)
    V = sample_potential(f, chain.element(r), chain.element(a))
    assert sorted(V.values) == sorted(f.values)


def test_periodize_examples():
    f = sampling_function([2, 4], 2, [1, 2, 3, 4])
    assert list(periodize(f, 1).values) == [2, 3]
    assert periodize(f, 2) == f
    c = sampling_function([2, 4], 2, [5.0] * 4)
    assert list(periodize(c, 1).values) == [5, 5]
    with pytest.raises(ValueError):
        periodize(sampling_function([2, 4], 1, [0, 0]), 2)


@given(vals=st.lists(st.floats(-10, 10), min_size=8, max_size=8), lam=st.floats(-3, 3))
def test_periodize_properties(vals, lam):
    f = sampling_function([2, 4, 8], 3, vals)
    g = periodize(f, 1)
    assert periodize(g, 1) == g
    assert g.sup_norm() <= f.sup_norm() + 1e-12
    assert np.allclose(periodize(scale(f, lam), 1).values, scale(g, lam).values)


def test_hull_points():
    f = sampling_function([2], 1, [1.0, 2.0])
    assert len(distinct_hull_points(f)) == 2
    f = sampling_function([2], 1, [4.0, 4.0])
    assert len(distinct_hull_points(f)) == 1
    f = sampling_function([4], 1, [1, 2, 3, 4])
    pts = hull_points(f)
    assert len(pts) == 4
    assert [list(p.values) for p in pts][1] == [2, 3, 4, 1]


@given(vals=st.lists(st.integers(0, 2), min_size=6, max_size=6))
def test_distinct_hull_count_divides_period(vals):
    f = sampling_function([6], 1, vals)
    assert 6 % len(distinct_hull_points(f)) == 0


def test_scale():
    f = sampling_function([2], 1, [1, -1])
    assert list(scale(f, 2).values) == [2, -2]
    assert scale(f, 0).sup_norm() == 0
    assert list(scale(f, -1).values) == [-1, 1]


@given(vals=st.lists(st.floats(-5, 5), min_size=2, max_size=2), level=st.integers(1, 3))
def test_embed_preserves_sup_norm(vals, level):
    f = sampling_function([2, 4, 8], 1, vals)
    g = f.embed(level)
    assert g.period == 2**level
    assert g.sup_norm() == f.sup_norm()
    assert np.array_equal(g.values[:2], f.values)


def test_sampling_function_arithmetic_and_json():
    f = sampling_function([2, 4], 1, [1, 2])
    g = sampling_function([2, 4], 2, [0, 0, 0, 1])
    h = f + g
    assert h.level == 2 and list(h.values) == [1, 2, 1, 3]
    assert math.isclose(h.distance(f.embed(2)), 1.0)
    assert SamplingFunction.from_dict(h.to_dict()) == h
    with pytest.raises(ValueError):
        SamplingFunction.from_dict({"periods": [2]})
    with pytest.raises(ValueError):
        sampling_function([2, 4], 2, [1, 2])


def test_potential_periodicity_and_shift():
    V = Potential([1.0, 2.0, 3.0])
    assert V(3) == V(0) and V(-1) == 3.0
    assert list(V.shifted(1).values) == [2, 3, 1]
    assert list(as_values(V)) == [1, 2, 3]
    with pytest.raises(ValueError):
        as_values([])
