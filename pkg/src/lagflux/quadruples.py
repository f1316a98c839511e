"""Admissible quadruples ``(X0, X1, Y0, Y1)`` stored combinatorially.

Each region is a finite union of boxes in a chart of the ambient model.  A
box may be degenerate in some directions (an edge ``y = 1`` is the box
``[l, r] x [1, 1]``), and chart directions may be periodic.  Points are only
produced on demand, by :meth:`Region.sample`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import qmc

from .errors import InvalidModel, InvalidPartition
from .lattice import LatticeClass, RationalLike, as_rational, decompose

LABELS = ("X0", "X1", "Y0", "Y1")
Number = Union[Fraction, float]


def residue_label(i: int) -> str:
    """Label of the ``i``-th arc (1-based) in counterclockwise order."""
    return ("Y0", "X0", "Y1", "X1")[i % 4]


# --- charts ---------------------------------------------------------------------

class Chart:
    """Coordinates in which the regions of a quadruple are boxes.

    Subclasses map phase-space points (rows of an ``(N, d)`` array) to chart
    coordinates and back.  ``periods[i]`` is the period of chart direction
    ``i`` or None.
    """

    name = "identity"

    def __init__(self, dim: int, periods: Optional[Sequence[Optional[float]]] = None):
        self.dim = dim
        self.periods = tuple(periods) if periods is not None else (None,) * dim

    def forward(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float)

    def inverse(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c, dtype=float)

    def params(self) -> Dict[str, object]:
        return {}


class TorusChart(Chart):
    """Angle coordinates on ``T^n`` whose first entry is the fibration ``<a, phi>``.

    ``basis`` is a unimodular integer matrix with first row the primitive
    class, so the chart is a torus automorphism.
    """

    name = "torus"

    def __init__(self, basis: Sequence[Sequence[int]]):
        self.basis = np.array(basis, dtype=np.int64)
        self.inverse_basis = np.rint(np.linalg.inv(self.basis)).astype(np.int64)
        super().__init__(len(basis), (1.0,) * len(basis))

    def forward(self, z):
        return np.mod(np.asarray(z, dtype=float) @ self.basis.T, 1.0)

    def inverse(self, c):
        return np.mod(np.asarray(c, dtype=float) @ self.inverse_basis.T, 1.0)

    def params(self):
        return {"basis": self.basis.tolist()}


class RotatingDiskChart(Chart):
    """``(x, y, theta, p) -> (pi r^2, angle of R(-n theta)(x, y) in turns, theta, p)``."""

    name = "rotating-disk"

    def __init__(self, winding: int):
        self.winding = int(winding)
        super().__init__(4, (None, 1.0, 1.0, None))

    def forward(self, z):
        z = np.asarray(z, dtype=float)
        x, y, theta, p = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
        s = math.pi * (x * x + y * y)
        xi = np.mod(np.arctan2(y, x) / (2 * math.pi) - self.winding * theta, 1.0)
        return np.stack([s, xi, np.mod(theta, 1.0), p], axis=-1)

    def inverse(self, c):
        c = np.asarray(c, dtype=float)
        s, xi, theta, p = c[..., 0], c[..., 1], c[..., 2], c[..., 3]
        r = np.sqrt(np.maximum(s, 0.0) / math.pi)
        ang = 2 * math.pi * (xi + self.winding * theta)
        return np.stack([r * np.cos(ang), r * np.sin(ang), theta, p], axis=-1)

    def params(self):
        return {"winding": self.winding}


# --- regions --------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    """Closed box ``prod [lo_i, hi_i]`` in chart coordinates."""

    lo: Tuple[Number, ...]
    hi: Tuple[Number, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box corners differ in dimension")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty box {self.lo} > {self.hi}")

    @property
    def free_dims(self) -> Tuple[int, ...]:
        return tuple(i for i, (l, h) in enumerate(zip(self.lo, self.hi)) if h > l)

    def intersects(self, other: "Box", periods: Sequence[Optional[float]]) -> bool:
        for l1, h1, l2, h2, per in zip(self.lo, self.hi, other.lo, other.hi, periods):
            shifts = (0,) if per is None else (-per, 0, per)
            if not any(l1 <= h2 + s and l2 + s <= h1 for s in shifts):
                return False
        return True


@dataclass(frozen=True)
class Region:
    boxes: Tuple[Box, ...]

    def contains(self, c: np.ndarray, tol: float = 0.0, periods=None) -> np.ndarray:
        """Membership of chart points ``c`` (shape ``(N, d)``) with slack ``tol``."""
        c = np.atleast_2d(np.asarray(c, dtype=float))
        out = np.zeros(len(c), dtype=bool)
        periods = periods or (None,) * c.shape[1]
        for box in self.boxes:
            inside = np.ones(len(c), dtype=bool)
            for i, (lo, hi, per) in enumerate(zip(box.lo, box.hi, periods)):
                v = c[:, i]
                if per is not None:
                    # distance to the arc measured around the circle
                    mid, half = (float(lo) + float(hi)) / 2, (float(hi) - float(lo)) / 2
                    d = np.abs(np.mod(v - mid + per / 2, per) - per / 2)
                    inside &= d <= half + tol
                else:
                    inside &= (v >= float(lo) - tol) & (v <= float(hi) + tol)
            out |= inside
        return out

    def sample(self, count: int, seed: int = 0) -> List[np.ndarray]:
        """Low-discrepancy points in each box, one ``(count, d)`` array per box."""
        out = []
        for b, box in enumerate(self.boxes):
            free = box.free_dims
            pts = np.tile(np.array([float(v) for v in box.lo]), (count, 1))
            if free:
                u = qmc.Halton(d=len(free), scramble=True, seed=seed + b).random(count)
                lo = np.array([float(box.lo[i]) for i in free])
                hi = np.array([float(box.hi[i]) for i in free])
                pts[:, free] = lo + u * (hi - lo)
            else:
                pts = pts[:1]
            out.append(pts)
        return out


@dataclass(frozen=True)
class ArcPartition:
    """Consecutive closed arcs of the circle ``R/Z`` with quadruple labels.

    Arc ``i`` runs from ``breakpoints[i]`` to ``breakpoints[i+1]`` (the last
    one wraps to ``breakpoints[0] + 1``).
    """

    breakpoints: Tuple[Fraction, ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        if len(self.breakpoints) != len(self.labels):
            raise InvalidPartition("one label per arc is required")
        b = self.breakpoints
        if any(not (0 <= t < 1) for t in b) or any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise InvalidPartition("breakpoints must increase within [0, 1)")

    def arcs(self) -> List[Tuple[Fraction, Fraction, str]]:
        b = self.breakpoints
        ends = b[1:] + (b[0] + 1,)
        return [(lo, hi, lab) for lo, hi, lab in zip(b, ends, self.labels)]

    def total_length(self) -> Fraction:
        return sum((hi - lo for lo, hi, _ in self.arcs()), Fraction(0))


@dataclass(frozen=True)
class AdmissibleQuadruple:
    """Four compact regions with ``X0 & X1 = Y0 & Y1 = {}`` in a common chart."""

    model: str
    chart: Chart
    regions: Dict[str, Region]
    params: Dict[str, object] = field(default_factory=dict)
    arcs: Optional[ArcPartition] = None

    def __post_init__(self):
        if set(self.regions) != set(LABELS):
            raise ValueError(f"regions must be exactly {LABELS}")
        if not self.is_admissible():
            raise InvalidPartition("X0/X1 or Y0/Y1 intersect")

    def __getitem__(self, label: str) -> Region:
        return self.regions[label]

    def _meet(self, a: str, b: str) -> bool:
        per = self.chart.periods
        return any(p.intersects(q, per) for p in self.regions[a].boxes for q in self.regions[b].boxes)

    def is_admissible(self) -> bool:
        return not self._meet("X0", "X1") and not self._meet("Y0", "Y1")

    def contains(self, label: str, z: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        c = self.chart.forward(np.atleast_2d(z))
        return self.regions[label].contains(c, tol, self.chart.periods)

    def sample(self, label: str, count: int, seed: int = 0) -> List[np.ndarray]:
        """Phase-space samples of a region, one array per component box."""
        return [self.chart.inverse(c) for c in self.regions[label].sample(count, seed)]


# --- torus fibrations -----------------------------------------------------------

def unimodular_completion(v: Sequence[int]) -> List[List[int]]:
    """An integer matrix of determinant +-1 whose first row is the primitive ``v``."""
    n = len(v)
    row = list(v)
    # column operations U with row @ U = e_1; then U^{-1} has first row v
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def addcol(dst, src, c):
        row[dst] += c * row[src]
        for r in U:
            r[dst] += c * r[src]

    def swapcol(a, b):
        row[a], row[b] = row[b], row[a]
        for r in U:
            r[a], r[b] = r[b], r[a]

    while sum(1 for e in row if e) > 1 or row[0] == 0:
        nz = [i for i, e in enumerate(row) if e]
        piv = min(nz, key=lambda i: abs(row[i]))
        for i in nz:
            if i != piv:
                addcol(i, piv, -(row[i] // row[piv]))
        if sum(1 for e in row if e) == 1 and row[0] == 0:
            swapcol(0, piv)
    if row[0] == -1:
        for r in U:
            r[0] = -r[0]
        row[0] = 1
    if row[0] != 1:
        raise ValueError(f"{tuple(v)} is not primitive")
    inv = np.rint(np.linalg.inv(np.array(U, dtype=float))).astype(int).tolist()
    return inv


def torus_quadruple(n: int, alpha) -> AdmissibleQuadruple:
    """Quadruple cut from ``T^n`` by the linear fibration of ``alpha``.

    The circle is split into ``4k`` equal arcs, ``k`` the multiplicity.  The
    fibration is the one of the primitive class with its first nonzero entry
    made positive; when that flips the sign of ``alpha``, the arcs are read
    clockwise, which exchanges the two ``Y`` labels.
    """
    cls = alpha if isinstance(alpha, LatticeClass) else decompose(alpha)
    if cls.dim != n:
        raise ValueError(f"class of dimension {cls.dim} on a {n}-torus")
    prim = cls.primitive
    sign = 1 if next(e for e in prim if e) > 0 else -1
    canon = tuple(sign * e for e in prim)
    count = 4 * cls.multiplicity
    labels = [residue_label(i) for i in range(1, count + 1)]
    if sign < 0:
        labels = [{"Y0": "Y1", "Y1": "Y0"}.get(l, l) for l in labels]
    arcs = ArcPartition(tuple(Fraction(i, count) for i in range(count)), tuple(labels))
    rest_lo, rest_hi = (Fraction(0),) * (n - 1), (Fraction(1),) * (n - 1)
    regions = {lab: [] for lab in LABELS}
    for lo, hi, lab in arcs.arcs():
        regions[lab].append(Box((lo,) + rest_lo, (hi,) + rest_hi))
    chart = TorusChart(unimodular_completion(canon))
    return AdmissibleQuadruple(
        "torus",
        chart,
        {k: Region(tuple(v)) for k, v in regions.items()},
        {"n": n, "class": cls.entries},
        arcs,
    )


# --- the strip model --------------------------------------------------------------

def top_intervals(A: Fraction, k: int, eps: Fraction) -> List[Tuple[Fraction, Fraction, int]]:
    """Top-edge intervals ``(left, right, i)`` of ``[0, A]``, numbered right to left."""
    if A / k - 3 * eps <= 0:
        raise InvalidPartition(f"A/k - 3*eps = {A / k - 3 * eps} must be positive")
    out = []
    right = A
    for i in range(1, 4 * k - 2):
        if i == 1:
            length = A / k
        elif i % 4 == 1:
            length = A / k - 3 * eps
        else:
            length = eps
        out.append((right - length, right, i))
        right -= length
    assert right == 0
    return out


_TOP_LABEL = {1: "X1", 2: "Y0", 3: "X0", 0: "Y1"}


def _strip_boxes(A, k, eps, height=Fraction(1)):
    regions = {
        "X0": [Box((Fraction(0), Fraction(0)), (A, Fraction(0)))],
        "X1": [],
        "Y0": [Box((Fraction(0), Fraction(0)), (Fraction(0), height))],
        "Y1": [Box((A, Fraction(0)), (A, height))],
    }
    for left, right, i in top_intervals(A, k, eps):
        regions[_TOP_LABEL[i % 4]].append(Box((left, height), (right, height)))
    return regions


def surface_model_partition(A: RationalLike, k: int, eps: RationalLike) -> AdmissibleQuadruple:
    """Quadruple on the rectangle ``[0, A] x [0, 1]``.

    The bottom edge belongs to ``X0``, the left edge to ``Y0`` and the right
    edge to ``Y1``.  The top edge is cut into ``4k - 3`` intervals numbered
    from the right; residues 1, 2, 3, 0 mod 4 go to X1, Y0, X0, Y1.
    """
    A, eps = as_rational(A), as_rational(eps)
    if A <= 0 or eps <= 0 or k < 1:
        raise InvalidPartition("need A > 0, eps > 0 and k >= 1")
    regions = _strip_boxes(A, k, eps)
    return AdmissibleQuadruple(
        "surface-strip",
        Chart(2),
        {lab: Region(tuple(b)) for lab, b in regions.items()},
        {"A": A, "k": k, "eps": eps},
    )


def split_model_quadruple(xs: Sequence[RationalLike], k: int, eps: RationalLike) -> AdmissibleQuadruple:
    """Quadruple in ``R^{2n}`` (coordinates ``p_1..p_n, q_1..q_n``).

    The first ``n - 1`` factors are boundaries of squares of area ``x_i``;
    the last factor carries the strip quadruple of width ``x_n``.
    """
    xs = [as_rational(x) for x in xs]
    eps = as_rational(eps)
    n = len(xs)
    if n < 2:
        raise InvalidModel("split models need at least two factors")
    strip = _strip_boxes(xs[-1], k, eps)
    # square boundaries as four edges each
    squares = []
    for x in xs[:-1]:
        side = math.sqrt(x)
        zero = 0.0
        squares.append([
            ((zero, zero), (side, zero)),
            ((zero, side), (side, side)),
            ((zero, zero), (zero, side)),
            ((side, zero), (side, side)),
        ])

    def product_boxes(hat: List[Box]) -> Tuple[Box, ...]:
        boxes = []
        combos = [[]]
        for sq in squares:
            combos = [c + [edge] for c in combos for edge in sq]
        for combo in combos:
            for b in hat:
                lo_p = [e[0][0] for e in combo] + [b.lo[0]]
                hi_p = [e[1][0] for e in combo] + [b.hi[0]]
                lo_q = [e[0][1] for e in combo] + [b.lo[1]]
                hi_q = [e[1][1] for e in combo] + [b.hi[1]]
                boxes.append(Box(tuple(lo_p + lo_q), tuple(hi_p + hi_q)))
        return tuple(boxes)

    return AdmissibleQuadruple(
        "split",
        Chart(2 * n),
        {lab: Region(product_boxes(b)) for lab, b in strip.items()},
        {"x": tuple(xs), "k": k, "eps": eps},
    )


# --- Chekanov ---------------------------------------------------------------------

def chekanov_quadruple(a: RationalLike, m: int, n: int, k: RationalLike) -> AdmissibleQuadruple:
    """Rotating-arc quadruple in ``D(k) x T*_k S^1``.

    ``partial D(a)`` is cut into ``4m`` equal arcs; each region sweeps its
    arcs by ``R(n theta)`` over the zero section.  Arc ``j`` is labelled
    X0, Y1, X1, Y0 for ``j = 1, 2, 3, 0 mod 4``.
    """
    a, k = as_rational(a), as_rational(k)
    if a <= 0 or m < 1:
        raise InvalidModel("need a > 0 and m >= 1")
    if not (k > a and k > 4 * a * abs(n)):
        raise InvalidModel(f"k = {k} must exceed both a = {a} and 4a|n| = {4 * a * abs(n)}")
    regions = {lab: [] for lab in LABELS}
    for j in range(1, 4 * m + 1):
        lo, hi = Fraction(j - 1, 4 * m), Fraction(j, 4 * m)
        regions[residue_label(j)].append(Box((a, lo, Fraction(0), Fraction(0)), (a, hi, Fraction(1), Fraction(0))))
    arcs = ArcPartition(tuple(Fraction(j, 4 * m) for j in range(4 * m)),
                        tuple(residue_label(j) for j in range(1, 4 * m + 1)))
    return AdmissibleQuadruple(
        "chekanov",
        RotatingDiskChart(n),
        {lab: Region(tuple(b)) for lab, b in regions.items()},
        {"a": a, "m": m, "n": n, "k": k},
        arcs,
    )


# --- annulus ---------------------------------------------------------------------

def annulus_intervals(eps: RationalLike, k: int) -> List[Tuple[Fraction, Fraction, str]]:
    """``4k + 1`` equal consecutive intervals of ``[-eps, eps]`` with labels."""
    eps = as_rational(eps)
    count = 4 * k + 1
    width = 2 * eps / count
    return [(-eps + (i - 1) * width, -eps + i * width, residue_label(i)) for i in range(1, count + 1)]


def annulus_quadruple(eps: RationalLike, k: int) -> AdmissibleQuadruple:
    """Quadruple on ``(-eps, eps) x R/Z`` carried by the segment ``y = 0``."""
    if k < 1:
        raise InvalidModel("k must be at least 1")
    regions = {lab: [] for lab in LABELS}
    for lo, hi, lab in annulus_intervals(eps, k):
        regions[lab].append(Box((lo, Fraction(0)), (hi, Fraction(0))))
    return AdmissibleQuadruple(
        "annulus",
        Chart(2, (None, 1.0)),
        {lab: Region(tuple(b)) for lab, b in regions.items()},
        {"eps": as_rational(eps), "k": k},
    )
