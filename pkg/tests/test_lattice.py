from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lagflux.errors import DegenerateClass, DimensionError
from lagflux.lattice import LatticeClass, decompose, on_lattice, smallest_shift

from oracles import lattice_scan_shift, lattice_scan_shift_full


@pytest.mark.parametrize(
    "v, k, prim",
    [((2, 4), 2, (1, 2)), ((3, -6), 3, (1, -2)), ((0, 5), 5, (0, 1)), ((-7,), 7, (-1,))],
)
def test_decompose_examples(v, k, prim):
    c = decompose(v)
    assert c.multiplicity == k
    assert c.primitive == prim
    assert c.entries == tuple(v)


def test_decompose_rejects_zero():
    with pytest.raises(DegenerateClass):
        decompose((0, 0))


def test_decompose_rejects_non_integers():
    with pytest.raises(ValueError):
        decompose((F(1, 2), 1))


def test_lattice_class_invariants():
    with pytest.raises(ValueError):
        LatticeClass((2, 4), 1, (2, 4))
    with pytest.raises(ValueError):
        LatticeClass((2, 4), 2, (1, 1))
    assert -decompose((2, -4)) == decompose((-2, 4))


@pytest.mark.parametrize(
    "w, s, g, expected",
    [
        ((F(1, 3), F(1, 6)), (1, -1), F(1, 2), F(1, 3)),
        ((F(2, 5), F(2, 5)), (1, 1), F(1, 2), F(2, 5)),
        ((F(1, 3), F(1, 4)), (1, 0), F(1, 2), None),
    ],
)
def test_smallest_shift_examples(w, s, g, expected):
    assert smallest_shift(w, s, g) == expected


@pytest.mark.parametrize(
    "w, s, g",
    [
        ((F(1, 3), F(1, 6)), (1, -1), F(1, 2)),
        ((F(2, 5), F(2, 5)), (1, 1), F(1, 2)),
        ((F(1, 3), F(1, 4)), (1, 0), F(1, 2)),
    ],
)
def test_smallest_shift_examples_match_full_lattice_scan(w, s, g):
    assert smallest_shift(w, s, g) == lattice_scan_shift_full(w, s, g, radius=100)


def test_smallest_shift_dimension_mismatch():
    with pytest.raises(DimensionError):
        smallest_shift((1, 2), (1,), 1)


def test_smallest_shift_needs_positive_scale_and_direction():
    with pytest.raises(ValueError):
        smallest_shift((1, 2), (1, 1), 0)
    with pytest.raises(DegenerateClass):
        smallest_shift((1, 2), (0, 0), 1)


def test_smallest_shift_on_lattice_start_moves_a_full_period():
    # w already on the lattice: t must be positive, so one full period
    assert smallest_shift((1, 0), (2, 0), 1) == F(1, 2)


def test_smallest_shift_inconsistent_progressions():
    # t = 1/2 mod 1 from the first coordinate, t = 0 mod 1 from the second
    assert smallest_shift((F(1, 2), 0), (1, 1), 1) is None


rationals = st.fractions(min_value=-3, max_value=3, max_denominator=12)
small_ints = st.integers(min_value=-4, max_value=4)
scales = st.sampled_from([F(1), F(1, 2), F(1, 3), F(2, 3), F(1, 6)])


@settings(max_examples=300, deadline=None)
@given(w=st.lists(rationals, min_size=1, max_size=3), data=st.data(), g=scales)
def test_smallest_shift_agrees_with_scan(w, data, g):
    s = data.draw(st.lists(small_ints, min_size=len(w), max_size=len(w)).filter(any))
    t = smallest_shift(w, s, g)
    assert t == lattice_scan_shift(w, s, g, radius=400)
    if t is not None:
        assert t > 0
        assert on_lattice([wi - t * si for wi, si in zip(w, s)], g)


@settings(max_examples=200, deadline=None)
@given(
    w=st.lists(rationals, min_size=2, max_size=2),
    s=st.lists(small_ints, min_size=2, max_size=2).filter(any),
    g=scales,
    c=st.sampled_from([F(2), F(3), F(1, 2), F(5, 3)]),
)
def test_smallest_shift_reparametrisation(w, s, g, c):
    t = smallest_shift(w, s, g)
    tc = smallest_shift(w, [c * si for si in s], g)
    assert (t is None and tc is None) or tc == t / c


@settings(max_examples=200, deadline=None)
@given(v=st.lists(small_ints, min_size=1, max_size=4).filter(any), c=st.integers(min_value=1, max_value=9))
def test_decompose_multiplicity_is_homogeneous(v, c):
    assert decompose([c * e for e in v]).multiplicity == c * decompose(v).multiplicity
    assert decompose([c * e for e in v]).primitive == decompose(v).primitive
