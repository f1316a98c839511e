"""Convex rational polytopes in half-space form and exact ray geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Tuple, Union

from .errors import DegenerateClass, DimensionError, OutsideDomain
from .lattice import RationalLike, RationalVector, as_integer_vector, as_rational, as_rational_vector

Halfspace = Tuple[Tuple[int, ...], Fraction]
Extended = Union[Fraction, float]  # a Fraction, or math.inf

INF = math.inf


def _dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(a, b)), Fraction(0))


@dataclass(frozen=True)
class RationalPolytope:
    """The closed set ``{y : <normal_i, y> <= offset_i for all i}``.

    Normals are integer vectors and offsets exact rationals.  Unbounded
    polytopes (for instance the positive orthant) are allowed.
    """

    halfspaces: Tuple[Halfspace, ...]
    dim: int

    @classmethod
    def from_halfspaces(cls, pairs: Iterable[Tuple[Iterable[RationalLike], RationalLike]]):
        hs = tuple((as_integer_vector(n), as_rational(b)) for n, b in pairs)
        if not hs:
            raise ValueError("at least one halfspace is required")
        dims = {len(n) for n, _ in hs}
        if len(dims) != 1:
            raise DimensionError(f"normals of mixed dimension {sorted(dims)}")
        for n, _ in hs:
            if not any(n):
                raise DegenerateClass("zero normal vector")
        return cls(hs, dims.pop())

    @classmethod
    def orthant(cls, n: int) -> "RationalPolytope":
        """The moment image of C^n: all coordinates nonnegative."""
        return cls.from_halfspaces((tuple(-int(i == j) for j in range(n)), 0) for i in range(n))

    @classmethod
    def box(cls, lo: Iterable[RationalLike], hi: Iterable[RationalLike]) -> "RationalPolytope":
        lo, hi = as_rational_vector(lo), as_rational_vector(hi)
        if len(lo) != len(hi):
            raise DimensionError("box corners differ in dimension")
        n = len(lo)
        pairs = []
        for i in range(n):
            e = tuple(int(i == j) for j in range(n))
            pairs.append((e, hi[i]))
            pairs.append((tuple(-c for c in e), -lo[i]))
        return cls.from_halfspaces(pairs)

    @classmethod
    def simplex(cls, n: int) -> "RationalPolytope":
        """The moment simplex of CP^n: ``x_i >= 0`` and ``sum x_i <= 1``."""
        pairs = [(tuple(-int(i == j) for j in range(n)), 0) for i in range(n)]
        pairs.append(((1,) * n, 1))
        return cls.from_halfspaces(pairs)

    def slacks(self, x: Sequence[RationalLike]) -> Tuple[Fraction, ...]:
        """``offset_i - <normal_i, x>`` for every halfspace (nonnegative inside)."""
        x = as_rational_vector(x)
        if len(x) != self.dim:
            raise DimensionError(f"point of dimension {len(x)} in a {self.dim}-polytope")
        return tuple(b - _dot(n, x) for n, b in self.halfspaces)

    def contains(self, x: Sequence[RationalLike]) -> bool:
        return all(s >= 0 for s in self.slacks(x))

    def contains_interior(self, x: Sequence[RationalLike]) -> bool:
        return all(s > 0 for s in self.slacks(x))

    def interior_point(self) -> Optional[RationalVector]:
        """An exact point strictly inside, or None when the interior looks empty.

        A Chebyshev-centre LP is solved in floating point, the centre is
        rounded to a nearby rational and then checked exactly, so a returned
        point is always a genuine certificate.
        """
        import numpy as np
        from scipy.optimize import linprog

        A = np.array([n for n, _ in self.halfspaces], dtype=float)
        b = np.array([float(o) for _, o in self.halfspaces])
        norms = np.linalg.norm(A, axis=1)
        # variables (y, r): maximise r subject to A y + |a| r <= b, 0 <= r <= 1
        res = linprog(
            c=np.r_[np.zeros(self.dim), -1.0],
            A_ub=np.c_[A, norms],
            b_ub=b,
            bounds=[(None, None)] * self.dim + [(0, 1)],
            method="highs",
        )
        if res.status != 0 or res.x[-1] <= 0:
            return None
        for denom in (10**3, 10**6, 10**12):
            y = tuple(Fraction(float(v)).limit_denominator(denom) for v in res.x[:-1])
            if self.contains_interior(y):
                return y
        return None


def _ray_setup(P: RationalPolytope, x, alpha) -> Tuple[RationalVector, RationalVector]:
    x = as_rational_vector(x)
    alpha = as_rational_vector(alpha)
    if len(x) != P.dim or len(alpha) != P.dim:
        raise DimensionError("ray and polytope dimensions differ")
    if not any(alpha):
        raise DegenerateClass("ray direction must be nonzero")
    return x, alpha


def ray_exit(P: RationalPolytope, x: Sequence[RationalLike], alpha: Sequence[RationalLike]) -> Extended:
    """``sup{t >= 0 : x - t*alpha in P}``; ``math.inf`` if the ray stays inside.

    Only halfspaces whose normal has positive pairing with ``-alpha`` can stop
    the ray, and each stops it at ``slack / <normal, -alpha>``.
    """
    x, alpha = _ray_setup(P, x, alpha)
    slacks = P.slacks(x)
    if any(s < 0 for s in slacks):
        raise OutsideDomain(f"base point {x} is not in the polytope")
    best: Extended = INF
    for (normal, _), slack in zip(P.halfspaces, slacks):
        rate = -_dot(normal, alpha)
        if rate > 0:
            best = min(best, slack / rate)
    return best


def exit_point(P: RationalPolytope, x: Sequence[RationalLike], alpha: Sequence[RationalLike]) -> Optional[RationalVector]:
    """Where the ray ``x - t*alpha`` leaves ``P``; None for an unbounded ray."""
    t = ray_exit(P, x, alpha)
    if t == INF:
        return None
    x, alpha = _ray_setup(P, x, alpha)
    return tuple(xi - t * ai for xi, ai in zip(x, alpha))


def gauge(P: RationalPolytope, x: Sequence[RationalLike], alpha: Sequence[RationalLike]) -> Fraction:
    """Minkowski functional of ``P - x`` evaluated at ``-alpha``: ``1/ray_exit``."""
    if not P.contains_interior(as_rational_vector(x)):
        raise OutsideDomain("the gauge needs a base point in the interior")
    t = ray_exit(P, x, alpha)
    return Fraction(0) if t == INF else 1 / t
