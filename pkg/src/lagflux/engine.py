"""Case engine producing two-sided bounds for the deformation and
Poisson-bracket invariants of the supported Lagrangian families.

Every side of a result carries a provenance tag naming the statement that
produced it.  The tag strings are part of the report format and are kept
in :data:`TAGS` so that nothing else needs to spell them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, Optional, Sequence, Tuple, Union

from ._parallel import thread_map
from .errors import DegenerateClass, DimensionError, OutsideDomain
from .lattice import (
    LatticeClass,
    RationalLike,
    as_integer_vector,
    as_rational,
    as_rational_vector,
    smallest_shift,
)
from .polytope import INF, RationalPolytope, ray_exit

log = logging.getLogger(__name__)

Extended = Union[Fraction, float]
Side = Optional[Extended]  # None means "unknown"

TAGS = {
    "weakly_exact": "Thm-2.1",
    "surface_separating": "Thm-2.2",
    "surface_nonseparating": "Thm-2.3",
    "ray_exit": "Thm-2.4",
    "toric_interior": "Remark-2.5",
    "disk_plane": "Thm-2.6",
    "disk_space": "Thm-2.11",
    "plane_A": "Cor-2.8-A",
    "plane_B": "Cor-2.8-B",
    "plane_C": "Cor-2.8-C",
    "plane_D": "Cor-2.8-D",
    "plane_E": "Cor-2.8-E",
    "plane_monotone": "Cor-2.9",
    "chekanov_A": "Thm-2.13-A",
    "chekanov_B": "Thm-2.13-B",
    "split_A": "Thm-2.15-A",
    "split_B": "Thm-2.15-B",
    "split_C": "Thm-2.15-C",
    "cpn_upper": "Cor-2.18",
    "s2s2_upper": "Cor-2.21",
}

REGION_LABELS = ("A", "B", "C", "D", "E", "exact", "lower-only", "unknown")


def _fmt(v: Side) -> str:
    if v is None:
        return "unknown"
    if v == INF:
        return "inf"
    return str(v)


@dataclass(frozen=True)
class InvariantBound:
    """Lower and upper bound for an invariant, each with its source.

    ``upper is None`` means no statement in scope bounds that side; this is
    different from ``math.inf``.  ``lower`` is None only when nothing at all
    is known.
    """

    lower: Side
    upper: Side
    exact: bool = False
    lower_source: Optional[str] = None
    upper_source: Optional[str] = None

    def __post_init__(self):
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        if self.exact and (self.upper is None or self.lower != self.upper):
            raise ValueError("an exact bound needs equal, known sides")

    @classmethod
    def exactly(cls, value: Extended, source: str) -> "InvariantBound":
        return cls(value, value, True, source, source)

    @classmethod
    def unknown(cls) -> "InvariantBound":
        return cls(None, None)

    @property
    def value(self) -> Side:
        """The common value of an exact bound, else None."""
        return self.lower if self.exact else None

    def __str__(self):
        if self.exact:
            tags = self.lower_source
            if self.upper_source != self.lower_source:
                tags = f"{self.lower_source}, {self.upper_source}"
            return f"exact {_fmt(self.lower)} [{tags}]"
        lo = f"{_fmt(self.lower)} [{self.lower_source}]" if self.lower is not None else "unknown"
        hi = f"{_fmt(self.upper)} [{self.upper_source}]" if self.upper is not None else "unknown"
        return f"lower {lo}, upper {hi}"


def _two_sided(lower: Extended, lower_src: str, upper: Side, upper_src: Optional[str]) -> InvariantBound:
    if upper is None:
        return InvariantBound(lower, None, False, lower_src, None)
    return InvariantBound(lower, upper, lower == upper, lower_src, upper_src)


@dataclass(frozen=True)
class RelativePeriodData:
    """Symplectic areas, boundary pairings and Maslov indices on a basis
    ``A_1, ..., A_r`` of relative second homology."""

    omega_periods: Tuple[Fraction, ...]
    alpha_periods: Tuple[Fraction, ...]
    maslov: Tuple[int, ...]

    def __init__(self, omega_periods, alpha_periods, maslov):
        object.__setattr__(self, "omega_periods", as_rational_vector(omega_periods))
        object.__setattr__(self, "alpha_periods", as_rational_vector(alpha_periods))
        object.__setattr__(self, "maslov", tuple(int(m) for m in maslov))
        if not (len(self.omega_periods) == len(self.alpha_periods) == len(self.maslov)):
            raise DimensionError("period lists must share their length")
        if any(m % 2 for m in self.maslov):
            raise ValueError("Maslov indices of disks are even")


def _to_class(alpha) -> Tuple[int, ...]:
    if isinstance(alpha, LatticeClass):
        return alpha.entries
    return as_integer_vector(alpha)


# --- toric fibers --------------------------------------------------------------

def toric_fiber_bound(
    delta: RationalPolytope,
    x: Sequence[RationalLike],
    alpha,
    mode: str = "interior_only",
) -> InvariantBound:
    """Bound for the fiber over ``x`` of a toric manifold with moment image ``delta``.

    ``mode="interior_only"`` treats the ambient space as the preimage of the
    open polytope, where the ray exit is the exact value.  With
    ``"full_ambient"`` only the lower side is known in general.
    """
    if mode not in ("interior_only", "full_ambient"):
        raise ValueError(f"unknown mode {mode!r}")
    x = as_rational_vector(x)
    if not delta.contains_interior(x):
        raise OutsideDomain(f"{x} is not an interior point of the moment polytope")
    lower = ray_exit(delta, x, _to_class(alpha))
    if lower == INF:
        return InvariantBound.exactly(INF, TAGS["ray_exit"])
    if mode == "interior_only":
        return InvariantBound(lower, lower, True, TAGS["ray_exit"], TAGS["toric_interior"])
    return InvariantBound(lower, None, False, TAGS["ray_exit"], None)


# --- hypothesis-checked upper bounds -------------------------------------------

def weakly_exact_upper(d: RelativePeriodData) -> Optional[Fraction]:
    """The constant ``C > 0`` with ``alpha_periods = omega_periods / C``, if any."""
    if any(w <= 0 for w in d.omega_periods):
        raise ValueError("symplectic areas must be positive")
    if any(s == 0 for s in d.alpha_periods):
        return None
    ratios = {w / s for w, s in zip(d.omega_periods, d.alpha_periods)}
    if len(ratios) != 1:
        return None
    c = ratios.pop()
    return c if c > 0 else None


def disk_count_upper(n: int, d: RelativePeriodData, disks_nonvanishing: bool = True) -> Optional[Fraction]:
    """Upper bound ``omega(A_1)/sigma`` from a nonvanishing disk count.

    The first basis element is the distinguished class.  Whether its disk
    count is nonzero cannot be decided here, so the caller asserts it.
    """
    if not disks_nonvanishing:
        return None
    omega, alpha, mu = d.omega_periods, d.alpha_periods, d.maslov
    if len(omega) != n:
        raise DimensionError(f"expected {n} basis classes, got {len(omega)}")
    a, sigma = omega[0], alpha[0]
    if a <= 0:
        return None
    if sigma <= 0:
        log.debug("disk_count_upper: sigma=%s is not positive", sigma)
        return None
    if n == 2:
        if mu[0] != 2 or mu[1] < 0:
            return None
        k = mu[1] // 2
        if alpha[1] / sigma <= k + 1 <= omega[1] / a:
            return a / sigma
        return None
    if any(m != 2 for m in mu) or len(set(omega[1:])) != 1 or len(set(alpha[1:])) != 1:
        return None
    b, rho = omega[1], alpha[1]
    threshold = Fraction(n + 2, 2) if n % 2 == 0 else Fraction(n + 3, 2)
    if rho / sigma <= threshold <= b / a:
        return a / sigma
    return None


# --- split tori in C^n ----------------------------------------------------------

def _split_case(x: Tuple[Fraction, ...], m: Tuple[int, ...]) -> Tuple[str, InvariantBound]:
    n = len(x)
    plane = n == 2
    monotone = len(set(x)) == 1

    def tag(plane_key, general_key):
        if plane and monotone:
            return TAGS["plane_monotone"]
        return TAGS[plane_key] if plane else TAGS[general_key]

    if all(mi <= 0 for mi in m):
        return "A", InvariantBound.exactly(INF, tag("plane_A", "split_A"))

    support = [i for i, mi in enumerate(m) if mi != 0]
    if len(support) == 1:
        i = support[0]
        # k*e_i with k*x_min < x_i: some l >= k has x_min < x_i/l (take l = k)
        if m[i] > 0 and m[i] * min(x) < x[i]:
            return "B", InvariantBound.exactly(INF, tag("plane_B", "split_C"))

    if monotone and len(set(m)) == 1:
        src = TAGS["plane_monotone"] if plane else TAGS["split_B"]
        return "exact", InvariantBound.exactly(x[0] / m[0], src)

    lower = min(xi / mi for xi, mi in zip(x, m) if mi > 0)

    # disk-count upper bound, distinguished class first
    for i in range(n):
        rest = [j for j in range(n) if j != i]
        if m[i] <= 0:
            continue
        if len({x[j] for j in rest}) != 1 or len({m[j] for j in rest}) != 1:
            continue
        periods = RelativePeriodData(
            (x[i],) + tuple(x[j] for j in rest),
            (m[i],) + tuple(m[j] for j in rest),
            (2,) * n,
        )
        upper = disk_count_upper(n, periods)
        if upper is not None and upper == lower:
            if plane:
                return "E", InvariantBound.exactly(lower, TAGS["plane_E"])
            return "exact", InvariantBound(lower, upper, True, TAGS["split_A"], TAGS["disk_space"])

    upper = weakly_exact_upper(RelativePeriodData(x, m, (2,) * n))
    if plane and monotone:
        return "lower-only", _two_sided(lower, TAGS["plane_monotone"], upper, TAGS["weakly_exact"])
    if not plane:
        return ("exact" if upper is not None else "lower-only"), _two_sided(
            lower, TAGS["split_A"], upper, TAGS["weakly_exact"]
        )

    # two-dimensional, x_1 < x_2 after normalisation
    (x1, x2), (mm, nn) = x, m
    if mm > 0 and nn * x1 - mm * x2 <= 0:
        label, src = "C", TAGS["plane_C"]
    elif nn > 0 and nn * x1 - mm * x2 >= 0:
        label, src = "D", TAGS["plane_D"]
    else:  # pragma: no cover - the two half-planes cover every class with a positive entry
        return "unknown", InvariantBound(lower, None, False, TAGS["split_A"], None)
    if upper is not None:
        label = "exact"
    return label, _two_sided(lower, src, upper, TAGS["weakly_exact"])


def _normalise_split(x, m):
    x = as_rational_vector(x)
    m = as_integer_vector(m)
    if len(x) != len(m):
        raise DimensionError("x and the class must share their dimension")
    if any(xi <= 0 for xi in x):
        raise OutsideDomain("split tori need positive radii parameters")
    # sort by (x_i, m_i): the result is permutation invariant by construction
    order = sorted(range(len(x)), key=lambda i: (x[i], m[i]))
    return tuple(x[i] for i in order), tuple(m[i] for i in order)


def split_torus_bound(x: Sequence[RationalLike], m: Sequence[RationalLike]) -> InvariantBound:
    """Bound for the split torus ``T(x)`` in ``C^n`` and the class ``m``.

    Exact cases are tried first: all entries nonpositive, a single positive
    entry on a large coordinate, the monotone diagonal, and the disk-count
    case.  Otherwise the lower bound is ``min x_i/m_i`` over positive ``m_i``.
    """
    return _split_case(*_normalise_split(x, m))[1]


def region_diagram(
    x: Sequence[RationalLike], window: Tuple[int, int, int, int]
) -> Dict[Tuple[int, int], str]:
    """Case label for every integer class ``(m, n)`` in ``window``.

    ``window = (m_min, m_max, n_min, n_max)``, inclusive.  Cells are
    evaluated in parallel (capped by ``LAGFLUX_THREADS``) but the returned
    mapping is ordered row by row regardless.
    """
    x = as_rational_vector(x)
    if len(x) != 2:
        raise DimensionError("region diagrams are two dimensional")
    m0, m1, n0, n1 = window
    cells = list(product(range(m0, m1 + 1), range(n0, n1 + 1)))
    labels = thread_map(lambda c: _split_case(*_normalise_split(x, c))[0], cells)
    return dict(zip(cells, labels))


# --- Chekanov tori, surfaces ----------------------------------------------------

def chekanov_bound(a: RationalLike, m: int, n: int) -> InvariantBound:
    a = as_rational(a)
    if a <= 0:
        raise OutsideDomain("the Chekanov parameter must be positive")
    if m > 0:
        return InvariantBound(a / m, None, False, TAGS["chekanov_A"], None)
    if m < 0:
        return InvariantBound.exactly(INF, TAGS["chekanov_B"])
    return InvariantBound.unknown()


def _area(value) -> Extended:
    if value == INF or (isinstance(value, str) and value.strip() == "inf"):
        return INF
    v = as_rational(value)
    if v <= 0:
        raise OutsideDomain("areas must be positive")
    return v


def surface_bound(A_plus, A_minus, separating: bool, k: int) -> InvariantBound:
    """Bound for a closed curve on a surface and ``k`` times its dual class.

    ``A_plus``/``A_minus`` are the areas of the two sides of a separating
    curve (``math.inf`` or ``"inf"`` for a side of infinite area).
    """
    if k == 0:
        raise DegenerateClass("k must be nonzero")
    if not separating:
        return InvariantBound.exactly(INF, TAGS["surface_nonseparating"])
    area = _area(A_plus) if k > 0 else _area(A_minus)
    value = INF if area == INF else area / abs(k)
    return InvariantBound.exactly(value, TAGS["surface_separating"])


# --- projective fibers ----------------------------------------------------------

def _lattice_fiber(delta, x, alpha, g, upper_tag) -> InvariantBound:
    x = as_rational_vector(x)
    alpha = _to_class(alpha)
    if len(x) != delta.dim or len(alpha) != delta.dim:
        raise DimensionError("point, class and polytope dimensions differ")
    if not delta.contains_interior(x):
        raise OutsideDomain(f"{x} is not an interior point of the moment polytope")
    lower = ray_exit(delta, x, alpha)
    upper = smallest_shift(x, alpha, g)
    return _two_sided(lower, TAGS["ray_exit"], upper, upper_tag)


def cpn_fiber_bound(n: int, x: Sequence[RationalLike], alpha) -> InvariantBound:
    """Toric fiber of ``CP^n`` (moment simplex normalised to total area 1)."""
    return _lattice_fiber(RationalPolytope.simplex(n), x, alpha, Fraction(1, n), TAGS["cpn_upper"])


def s2s2_fiber_bound(x: Sequence[RationalLike], alpha) -> InvariantBound:
    """Toric fiber of ``S^2 x S^2`` with both spheres of area 1."""
    return _lattice_fiber(RationalPolytope.box((0, 0), (1, 1)), x, alpha, 1, TAGS["s2s2_upper"])
