from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lagflux.engine import (
    REGION_LABELS,
    TAGS,
    InvariantBound,
    RelativePeriodData,
    chekanov_bound,
    cpn_fiber_bound,
    disk_count_upper,
    region_diagram,
    s2s2_fiber_bound,
    split_torus_bound,
    surface_bound,
    toric_fiber_bound,
    weakly_exact_upper,
)
from lagflux.errors import DegenerateClass, DimensionError, OutsideDomain
from lagflux.lattice import decompose, smallest_shift
from lagflux.polytope import INF, RationalPolytope, exit_point, ray_exit

from oracles import lattice_scan_shift, plane_case_table

QUADRANT = RationalPolytope.orthant(2)


# --- the bound type -------------------------------------------------------------

def test_invariant_bound_invariants():
    with pytest.raises(ValueError):
        InvariantBound(F(2), F(1))
    with pytest.raises(ValueError):
        InvariantBound(F(1), None, exact=True)
    b = InvariantBound.exactly(F(1, 3), "t")
    assert b.value == F(1, 3) and b.exact
    assert InvariantBound.unknown().lower is None
    assert str(b) == "exact 1/3 [t]"
    assert str(InvariantBound(F(1), None, False, "s")) == "lower 1 [s], upper unknown"


# --- toric fibers -----------------------------------------------------------------

def test_toric_interior_only_is_exact():
    b = toric_fiber_bound(QUADRANT, (1, 3), (1, 2), "interior_only")
    assert b.exact and b.value == 1
    assert b.upper_source == TAGS["toric_interior"]


@pytest.mark.parametrize("mode", ["interior_only", "full_ambient"])
def test_toric_unbounded_ray_is_exact_infinity(mode):
    b = toric_fiber_bound(QUADRANT, (1, 3), (0, -1), mode)
    assert b.exact and b.value == INF


def test_toric_full_ambient_leaves_upper_unknown():
    b = toric_fiber_bound(RationalPolytope.simplex(2), (F(1, 3), F(1, 3)), (1, 1), "full_ambient")
    assert b.lower == F(1, 3) and b.upper is None and not b.exact


def test_toric_rejects_boundary_points_and_bad_modes():
    with pytest.raises(OutsideDomain):
        toric_fiber_bound(QUADRANT, (0, 3), (1, 2))
    with pytest.raises(ValueError):
        toric_fiber_bound(QUADRANT, (1, 3), (1, 2), "sideways")


def test_toric_accepts_lattice_classes():
    assert toric_fiber_bound(QUADRANT, (1, 3), decompose((2, 4))).value == F(1, 2)


# --- hypothesis-checked upper bounds ----------------------------------------------

@pytest.mark.parametrize(
    "omega, alpha, expected",
    [((2, 2), (1, 1), F(2)), ((1, 3), (1, 2), None), ((2, 2), (-1, -1), None), ((2, 2), (1, 0), None)],
)
def test_weakly_exact_upper_examples(omega, alpha, expected):
    assert weakly_exact_upper(RelativePeriodData(omega, alpha, (2, 2))) == expected


def test_relative_period_data_validation():
    with pytest.raises(DimensionError):
        RelativePeriodData((1, 2), (1,), (2, 2))
    with pytest.raises(ValueError):
        RelativePeriodData((1, 2), (1, 1), (2, 3))


def test_disk_count_upper_examples():
    assert disk_count_upper(2, RelativePeriodData((1, 3), (1, 2), (2, 2))) == 1
    assert disk_count_upper(2, RelativePeriodData((1, F(3, 2)), (1, 2), (2, 2))) is None
    assert disk_count_upper(3, RelativePeriodData((1, 3, 3), (1, 3, 3), (2, 2, 2))) == 1


def test_disk_count_upper_failure_modes():
    assert disk_count_upper(2, RelativePeriodData((1, 3), (0, 2), (2, 2))) is None
    assert disk_count_upper(2, RelativePeriodData((1, 3), (1, 2), (2, 2)), disks_nonvanishing=False) is None
    assert disk_count_upper(3, RelativePeriodData((1, 3, 2), (1, 3, 3), (2, 2, 2))) is None
    # even dimension uses the (n+2)/2 threshold
    assert disk_count_upper(4, RelativePeriodData((1, 3, 3, 3), (1, 3, 3, 3), (2, 2, 2, 2))) == 1
    with pytest.raises(DimensionError):
        disk_count_upper(3, RelativePeriodData((1, 3), (1, 2), (2, 2)))


# --- split tori -----------------------------------------------------------------

@pytest.mark.parametrize(
    "x, m, value, tag",
    [
        ((1, 3), (1, 2), F(1), "plane_E"),
        ((1, 3), (0, 1), INF, "plane_B"),
        ((2, 2), (3, 3), F(2, 3), "plane_monotone"),
        ((1, 1, 1), (2, 2, 2), F(1, 2), "split_B"),
        ((1, 3), (-1, -2), INF, "plane_A"),
    ],
)
def test_split_examples(x, m, value, tag):
    b = split_torus_bound(x, m)
    assert b.exact and b.value == value
    assert b.lower_source == TAGS[tag]


def test_split_lower_only_case_keeps_upper_unknown():
    b = split_torus_bound((2, 2), (1, 2))
    assert b.lower == 1 and b.upper is None and not b.exact


def test_split_pure_class_on_the_smallest_factor_is_finite():
    # the small-coordinate exactness needs x_min < x_i/l, which fails when x_i is the minimum
    b = split_torus_bound((F(1, 3), 1, 1), (1, 0, 0))
    assert b.exact and b.value == F(1, 3)
    assert split_torus_bound((F(1, 3), 1, 1), (0, 1, 0)).value == INF
    assert split_torus_bound((F(1, 3), 1, 1), (0, 2, 0)).value == INF
    assert split_torus_bound((F(1, 3), 1, 1), (0, 3, 0)).value is None


def test_split_errors():
    with pytest.raises(OutsideDomain):
        split_torus_bound((0, 1), (1, 1))
    with pytest.raises(DimensionError):
        split_torus_bound((1, 1), (1, 1, 1))


def test_plane_grid_matches_hand_written_case_table():
    for xs in [(1, 3), (1, 2), (2, 5), (1, 1), (2, 3), (3, 1), (F(1, 2), F(7, 3))]:
        lo, hi = sorted(xs)
        for m in range(-4, 5):
            for n in range(-4, 5):
                if (m, n) == (0, 0):
                    continue
                # the table is stated for x1 <= x2; swap coordinates otherwise
                mm, nn = (m, n) if xs[0] <= xs[1] else (n, m)
                label, lower, exact = plane_case_table(lo, hi, mm, nn)
                b = split_torus_bound(xs, (m, n))
                assert b.lower == lower, (xs, m, n, label)
                if exact:
                    assert b.exact, (xs, m, n, label)
                elif b.exact:
                    # only a class proportional to x adds an upper bound outside the table
                    assert b.upper_source in (TAGS["weakly_exact"], TAGS["plane_monotone"]), (xs, m, n)
                    assert xs[0] * n == xs[1] * m


def test_region_diagram_examples():
    grid = region_diagram((1, 3), (-3, 3, -3, 3))
    assert len(grid) == 49
    assert grid[(1, 2)] == "E"
    assert grid[(-1, -2)] == "A"
    assert grid[(0, 1)] == "B"
    assert set(grid.values()) <= set(REGION_LABELS)
    mono = region_diagram((2, 2), (-3, 3, -3, 3))
    assert mono[(1, 2)] == "lower-only"
    assert split_torus_bound((2, 2), (1, 2)).lower == 1
    assert mono[(2, 2)] == "exact"


def test_region_diagram_labels_ignore_scale():
    assert region_diagram((1, 1), (-3, 3, -3, 3)) == region_diagram((2, 2), (-3, 3, -3, 3))
    assert region_diagram((1, 3), (-3, 3, -3, 3)) == region_diagram((F(1, 2), F(3, 2)), (-3, 3, -3, 3))


def test_region_diagram_needs_two_dimensions():
    with pytest.raises(DimensionError):
        region_diagram((1, 2, 3), (0, 1, 0, 1))


# --- Chekanov tori and surfaces ----------------------------------------------------

def test_chekanov_examples():
    b = chekanov_bound(1, 2, 5)
    assert b.lower == F(1, 2) and b.upper is None
    assert chekanov_bound(1, -1, 7).value == INF
    u = chekanov_bound(1, 0, 4)
    assert u.lower is None and u.upper is None
    with pytest.raises(OutsideDomain):
        chekanov_bound(0, 1, 1)


def test_surface_examples():
    assert surface_bound(2, 5, True, 2).value == 1
    assert surface_bound(2, 5, True, -2).value == F(5, 2)
    assert surface_bound(None, None, False, 7).value == INF
    assert surface_bound(2, "inf", True, -1).value == INF
    assert surface_bound(2, 5, True, 2).lower_source == TAGS["surface_separating"]
    with pytest.raises(DegenerateClass):
        surface_bound(2, 5, True, 0)
    with pytest.raises(OutsideDomain):
        surface_bound(-2, 5, True, 1)


# --- projective and product fibers ---------------------------------------------------

def test_cpn_examples():
    third = F(1, 3)
    b = cpn_fiber_bound(2, (third, third), (1, 1))
    assert b.exact and b.value == third
    assert b.lower == ray_exit(RationalPolytope.simplex(2), (third, third), (1, 1))
    assert b.upper == smallest_shift((third, third), (1, 1), F(1, 2))
    assert lattice_scan_shift((third, third), (1, 1), F(1, 2)) == third
    b = cpn_fiber_bound(2, (third, third), (1, 0))
    assert b.lower == third and b.upper is None
    b = cpn_fiber_bound(2, (F(1, 2), F(1, 4)), (1, 0))
    assert b.lower == F(1, 2) and b.upper is None
    with pytest.raises(OutsideDomain):
        cpn_fiber_bound(2, (F(1, 2), F(1, 2)), (1, 1))


def test_s2s2_examples():
    b = s2s2_fiber_bound((F(1, 2), F(1, 2)), (1, 1))
    assert b.exact and b.value == F(1, 2)
    b = s2s2_fiber_bound((F(3, 4), F(1, 4)), (1, -1))
    assert b.exact and b.value == F(3, 4)
    assert exit_point(RationalPolytope.box((0, 0), (1, 1)), (F(3, 4), F(1, 4)), (1, -1)) == (0, 1)
    b = s2s2_fiber_bound((F(1, 2), F(1, 3)), (1, 0))
    assert b.lower == F(1, 2) and b.upper is None
    with pytest.raises(OutsideDomain):
        s2s2_fiber_bound((1, F(1, 2)), (1, 0))


# --- properties ----------------------------------------------------------------------

pos = st.fractions(min_value=F(1, 10), max_value=5, max_denominator=10).filter(lambda v: v > 0)
ints = st.integers(min_value=-4, max_value=4)


@settings(max_examples=300, deadline=None)
@given(x=st.lists(pos, min_size=2, max_size=4), data=st.data())
def test_split_permutation_invariance(x, data):
    m = data.draw(st.lists(ints, min_size=len(x), max_size=len(x)))
    perm = data.draw(st.permutations(range(len(x))))
    assert split_torus_bound([x[i] for i in perm], [m[i] for i in perm]) == split_torus_bound(x, m)


@settings(max_examples=300, deadline=None)
@given(x=st.lists(pos, min_size=2, max_size=4), data=st.data(), c=pos)
def test_split_bounds_scale_linearly_with_x(x, data, c):
    # every closed form (min x_i/m_i, x/k, x_1/m) is linear in x, so both sides scale by c
    m = data.draw(st.lists(ints, min_size=len(x), max_size=len(x)))
    b = split_torus_bound(x, m)
    bc = split_torus_bound([c * xi for xi in x], m)

    def scaled(v):
        return v if v is None or v == INF else v * c

    assert (bc.lower, bc.upper, bc.exact) == (scaled(b.lower), scaled(b.upper), b.exact)


@settings(max_examples=300, deadline=None)
@given(x=st.lists(pos, min_size=2, max_size=4), data=st.data(), c=st.integers(min_value=1, max_value=5))
def test_split_lower_bound_class_homogeneity(x, data, c):
    m = data.draw(st.lists(ints, min_size=len(x), max_size=len(x)).filter(lambda v: any(e > 0 for e in v)))
    formula = min(xi / mi for xi, mi in zip(x, m) if mi > 0)
    scaled = min(xi / (c * mi) for xi, mi in zip(x, m) if mi > 0)
    assert scaled == formula / c
    assert ray_exit(RationalPolytope.orthant(len(x)), x, [c * e for e in m]) == scaled
    b = split_torus_bound(x, [c * e for e in m])
    assert b.lower == INF or b.lower >= scaled


@settings(max_examples=300, deadline=None)
@given(num=st.tuples(st.integers(1, 9), st.integers(1, 9)), alpha=st.tuples(ints, ints).filter(any))
def test_projective_fibers_sandwich_and_exact_hit(num, alpha):
    x = (F(num[0], 20), F(num[1], 20))
    for b, P, g in [
        (cpn_fiber_bound(2, x, alpha), RationalPolytope.simplex(2), F(1, 2)),
        (s2s2_fiber_bound(x, alpha), RationalPolytope.box((0, 0), (1, 1)), F(1)),
    ]:
        if b.upper is not None:
            assert b.lower <= b.upper
        if b.exact:
            hit = tuple(xi - b.value * ai for xi, ai in zip(x, alpha))
            assert hit == exit_point(P, x, alpha)
            assert all((h / g).denominator == 1 for h in hit)
