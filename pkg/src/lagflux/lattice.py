"""Exact lattice arithmetic: rational vectors, primitive classes, ray shifts.

Everything here is exact.  Rationals are :class:`fractions.Fraction`; floats
are refused so that lattice membership never depends on rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Optional, Sequence, Tuple, Union

from .errors import DegenerateClass, DimensionError

RationalLike = Union[int, Fraction, str, Decimal]
RationalVector = Tuple[Fraction, ...]


def as_rational(value: RationalLike) -> Fraction:
    """Convert ``value`` to a Fraction without any floating-point detour.

    Accepts integers, Fractions, Decimals and strings such as ``"3/4"`` or
    ``"-2"``.  Floats raise ``TypeError``: ``0.1`` is not one tenth.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}; pass a Fraction or a 'p/q' string")
    if isinstance(value, (Rational, Decimal)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def as_rational_vector(values: Iterable[RationalLike]) -> RationalVector:
    vec = tuple(as_rational(v) for v in values)
    if not vec:
        raise DimensionError("vectors must have dimension at least 1")
    return vec


def as_integer_vector(values: Iterable[RationalLike]) -> Tuple[int, ...]:
    out = []
    for v in as_rational_vector(values):
        if v.denominator != 1:
            raise ValueError(f"expected an integer entry, got {v}")
        out.append(v.numerator)
    return tuple(out)


def _check_same_dim(*vectors: Sequence) -> int:
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True)
class LatticeClass:
    """A nonzero integral class ``entries = multiplicity * primitive``."""

    entries: Tuple[int, ...]
    multiplicity: int
    primitive: Tuple[int, ...]

    def __post_init__(self):
        if self.multiplicity <= 0:
            raise DegenerateClass("multiplicity must be positive")
        if tuple(self.multiplicity * p for p in self.primitive) != self.entries:
            raise ValueError("entries must equal multiplicity * primitive")
        if math.gcd(*self.primitive) != 1:
            raise ValueError("primitive part must have gcd 1")

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __neg__(self) -> "LatticeClass":
        return LatticeClass(
            tuple(-e for e in self.entries),
            self.multiplicity,
            tuple(-p for p in self.primitive),
        )


def decompose(v: Iterable[RationalLike]) -> LatticeClass:
    """Split a nonzero integer vector into its gcd and primitive part.

    The gcd is the rational length of ``v``.

    >>> decompose((3, -6))
    LatticeClass(entries=(3, -6), multiplicity=3, primitive=(1, -2))
    """
    entries = as_integer_vector(v)
    k = math.gcd(*entries)
    if k == 0:
        raise DegenerateClass("the zero vector has no primitive decomposition")
    return LatticeClass(entries, k, tuple(e // k for e in entries))


def _crt_merge(r1: int, m1: int, r2: int, m2: int) -> Optional[Tuple[int, int]]:
    # solve t = r1 mod m1, t = r2 mod m2 for possibly non-coprime moduli
    g = math.gcd(m1, m2)
    diff = r2 - r1
    if diff % g:
        return None
    m2g = m2 // g
    step = (diff // g) * pow(m1 // g, -1, m2g) % m2g if m2g > 1 else 0
    modulus = m1 * m2g
    return (r1 + m1 * step) % modulus, modulus


def smallest_shift(
    w: Iterable[RationalLike], s: Iterable[RationalLike], g: RationalLike
) -> Optional[Fraction]:
    """Smallest ``t > 0`` with ``w - t*s`` in ``g * Z^n``, or None.

    Coordinate ``i`` with ``s_i != 0`` admits exactly the progression
    ``t = w_i/s_i (mod g/|s_i|)``.  Coordinates with ``s_i = 0`` do not move,
    so they either already lie on the lattice or rule out every ``t``.
    The progressions are intersected by a CRT merge after clearing
    denominators.
    """
    w = as_rational_vector(w)
    s = as_rational_vector(s)
    g = as_rational(g)
    _check_same_dim(w, s)
    if g <= 0:
        raise ValueError("lattice scale g must be positive")
    if not any(s):
        raise DegenerateClass("direction s is zero; no smallest positive shift exists")

    congruences = []
    for wi, si in zip(w, s):
        if si == 0:
            if (wi / g).denominator != 1:
                return None
            continue
        congruences.append((wi / si, g / abs(si)))

    scale = math.lcm(*(x.denominator for pair in congruences for x in pair))
    residue, modulus = 0, 1
    for r, m in congruences:
        merged = _crt_merge(residue, modulus, int(r * scale) % int(m * scale), int(m * scale))
        if merged is None:
            return None
        residue, modulus = merged
    return Fraction(residue or modulus, scale)


def on_lattice(point: Iterable[RationalLike], g: RationalLike) -> bool:
    """True when every coordinate of ``point`` is an integer multiple of ``g``."""
    g = as_rational(g)
    return all((as_rational(p) / g).denominator == 1 for p in point)
