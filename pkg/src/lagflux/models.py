"""Explicit Hamiltonians used as witnesses for the lower bounds.

Every model is a :class:`HamiltonianModel`: a vectorised value/gradient pair
on an ``(N, d)`` array of phase points, the list of conjugate coordinate
pairs, a domain, and the values it is declared to take on the regions of an
admissible quadruple.

Sign convention.  With ``omega = sum dp_i ^ dq_i`` and ``i_X omega = -dH`` the
symplectic gradient has components ``-dH/dq_i`` along ``p_i`` and ``+dH/dp_i``
along ``q_i``.  A pair ``(P, Q)`` in :attr:`HamiltonianModel.pairs` lists the
column indices of ``p_i`` and ``q_i``.  The Poisson bracket is
``{F, G} = sum_i (dF/dq_i dG/dp_i - dF/dp_i dG/dq_i)``, so ``{p_1, q_1} = -1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidModel, OutsideDomain
from .lattice import as_rational
from .quadruples import (
    AdmissibleQuadruple,
    annulus_intervals,
    annulus_quadruple,
    chekanov_quadruple,
    split_model_quadruple,
    surface_model_partition,
    top_intervals,
)

ArrayFn = Callable[[np.ndarray], np.ndarray]


def _exact(value) -> Fraction:
    """Exact rational from a rational-like value or a (binary exact) float."""
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidModel(f"parameter {value!r} must be finite")
        return Fraction(value)
    return as_rational(value)


def _batch(z) -> Tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    return np.atleast_2d(z), single


# --- smoothing kernels ---------------------------------------------------------------

def _biweight_ramp(t: np.ndarray) -> np.ndarray:
    """``max(t, 0)`` convolved with the biweight kernel on ``[-1, 1]``."""
    c = np.clip(t, -1.0, 1.0)
    c2 = c * c
    inner = c / 2 + 5 / 32 + (15 / 16) * (c2 / 2 - c2 * c2 / 6 + c2 * c2 * c2 / 30)
    return np.where(t >= 1.0, t, np.where(t <= -1.0, 0.0, inner))


def _biweight_step(t: np.ndarray) -> np.ndarray:
    """Derivative of :func:`_biweight_ramp`: the biweight distribution function."""
    c = np.clip(t, -1.0, 1.0)
    c2 = c * c
    return 0.5 + (15 / 16) * c * (1 - c2 * (2 / 3 - c2 / 5))


def smoothstep(t: np.ndarray) -> np.ndarray:
    """Quintic step, 0 for ``t <= 0`` and 1 for ``t >= 1``, C^2 at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10 - 15 * t + 6 * t * t)


def smoothstep_derivative(t: np.ndarray) -> np.ndarray:
    inside = (t > 0) & (t < 1)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30 * t * t * (1 - t) ** 2, 0.0)


@dataclass(frozen=True, eq=False)
class SmoothedProfile:
    """A piecewise-linear function of one variable, mollified at its kinks.

    The generator interpolates ``knots`` linearly and is constant beyond the
    first and last knot.  Convolution with the biweight kernel of half-width
    ``delta`` only changes it within ``delta`` of a kink, where each kink of
    slope jump ``j`` adds ``j * delta * (P(t) - max(t, 0))`` with ``t`` the
    scaled offset.  The result is C^3 with the same range and the same maximal
    slope as the generator, and it agrees with the generator away from kinks.
    """

    xs: np.ndarray
    ys: np.ndarray
    delta: float
    jumps: np.ndarray = field(repr=False)
    window: int = field(repr=False)

    @classmethod
    def from_knots(cls, knots: Iterable[Tuple[float, float]], delta: float) -> "SmoothedProfile":
        pts = [(float(x), float(y)) for x, y in knots]
        if len(pts) < 2:
            raise InvalidModel("a profile needs at least two knots")
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        if np.any(np.diff(xs) <= 0):
            raise InvalidModel("profile knots must be strictly increasing")
        if not delta > 0:
            raise InvalidModel("smoothing width must be positive")
        slopes = np.diff(ys) / np.diff(xs)
        jumps = np.diff(np.concatenate([[0.0], slopes, [0.0]]))
        # most knots any point can see within delta on either side
        window = int(max(np.searchsorted(xs, xs + 2 * delta, side="right") - np.arange(len(xs)))) + 1
        return cls(xs, ys, float(delta), jumps, window)

    @property
    def knots(self) -> List[Tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def generator(self, x) -> np.ndarray:
        return np.interp(x, self.xs, self.ys)

    def _nearby(self, x: np.ndarray):
        """``(where, knot, t)`` for every point within ``delta`` of a knot.

        ``where`` indexes the flattened ``x`` and may repeat when knots are
        closer than ``2 delta``.  Most points lie away from every kink, so the
        kernels only run on these few.
        """
        flat = x.reshape(-1)
        first = np.searchsorted(self.xs, flat - self.delta, side="left")
        j = first[:, None] + np.arange(self.window)
        valid = j < len(self.xs)
        j = np.where(valid, j, len(self.xs) - 1)
        t = (flat[:, None] - self.xs[j]) / self.delta
        rows, cols = np.nonzero(valid & (np.abs(t) < 1.0))
        return rows, j[rows, cols], t[rows, cols]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.array(self.generator(x), dtype=float)
        where, j, t = self._nearby(x)
        np.add.at(out.reshape(-1), where, self.jumps[j] * self.delta * (_biweight_ramp(t) - np.maximum(t, 0.0)))
        return out

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, -1, len(self.xs) - 1)
        out = np.array(self._padded_slopes[idx + 1], dtype=float)
        where, j, t = self._nearby(x)
        np.add.at(out.reshape(-1), where, self.jumps[j] * (_biweight_step(t) - (t >= 0)))
        return out

    @cached_property
    def _padded_slopes(self) -> np.ndarray:
        return np.concatenate([[0.0], np.diff(self.ys) / np.diff(self.xs), [0.0]])

    def max_generator_slope(self, lo: float, hi: float) -> float:
        """Largest absolute generator slope on segments meeting ``[lo, hi]``."""
        best = 0.0
        for i in range(len(self.xs) - 1):
            if self.xs[i + 1] > lo and self.xs[i] < hi:
                best = max(best, abs((self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])))
        return best


def band_profile(bands: Sequence[Tuple[float, float, float]], margin: float, delta: float,
                 tail: Optional[Tuple[float, float]] = None) -> SmoothedProfile:
    """Profile equal to ``value`` on ``[l - margin, r + margin]`` for each band.

    Consecutive bands are joined by straight ramps.  ``tail = (x, y)`` adds a
    final ramp from the last band to the value ``y`` reached at ``x``.
    """
    knots: List[Tuple[float, float]] = []
    for l, r, v in bands:
        knots.append((l - margin, v))
        knots.append((r + margin, v))
    if tail is not None:
        knots.append(tail)
    xs = [k[0] for k in knots]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise InvalidModel("bands are too close for the requested margin")
    return SmoothedProfile.from_knots(knots, delta)


# --- model container -----------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Open box ``prod (lo_i, hi_i)`` (None for unbounded), optionally cut by a disk.

    ``disk = (i, j, s_max)`` further requires ``pi (z_i^2 + z_j^2) < s_max``.
    ``periods[i]`` marks an angular coordinate (its bounds are ignored).
    """

    description: str
    bounds: Tuple[Tuple[Optional[float], Optional[float]], ...]
    periods: Tuple[Optional[float], ...] = ()
    disk: Optional[Tuple[int, int, float]] = None

    def __post_init__(self):
        if not self.periods:
            object.__setattr__(self, "periods", (None,) * len(self.bounds))

    @classmethod
    def everywhere(cls, dim: int) -> "Domain":
        return cls(f"R^{dim}", ((None, None),) * dim)

    def contains(self, z) -> np.ndarray:
        z, _ = _batch(z)
        ok = np.all(np.isfinite(z), axis=1)
        for i, ((lo, hi), per) in enumerate(zip(self.bounds, self.periods)):
            if per is not None:
                continue
            if lo is not None:
                ok &= z[:, i] > lo
            if hi is not None:
                ok &= z[:, i] < hi
        if self.disk is not None:
            i, j, smax = self.disk
            ok &= math.pi * (z[:, i] ** 2 + z[:, j] ** 2) < smax
        return ok


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """An evaluable Hamiltonian with the data needed to certify it.

    ``bindings`` declares the maximum over ``X0``/``Y0`` and the minimum over
    ``X1``/``Y1`` for the labels present.  ``constants`` records construction
    parameters and measured diagnostics; ``profiles`` the smoothed profiles
    the model is assembled from.
    """

    name: str
    dim: int
    pairs: Tuple[Tuple[int, int], ...]
    evaluator: ArrayFn
    gradient_fn: Optional[ArrayFn]
    domain: Domain
    delta: float = 0.0
    constants: Mapping[str, object] = field(default_factory=dict)
    bindings: Mapping[str, float] = field(default_factory=dict)
    quadruple: Optional[AdmissibleQuadruple] = None
    profiles: Mapping[str, SmoothedProfile] = field(default_factory=dict)

    def __post_init__(self):
        used = [i for pair in self.pairs for i in pair]
        if sorted(used) != list(range(self.dim)):
            raise InvalidModel(f"pairs {self.pairs} must partition the {self.dim} coordinates")

    def value(self, z):
        zz, single = _batch(z)
        out = np.asarray(self.evaluator(zz), dtype=float)
        return float(out[0]) if single else out

    def gradient(self, z) -> np.ndarray:
        zz, single = _batch(z)
        if self.gradient_fn is not None:
            g = np.asarray(self.gradient_fn(zz), dtype=float)
        else:
            g = _central_gradient(self.evaluator, zz, 1e-6)
        return g[0] if single else g

    def sgrad(self, z) -> np.ndarray:
        zz, single = _batch(z)
        g = self.gradient(zz)
        out = np.empty_like(g)
        for P, Q in self.pairs:
            out[:, P] = -g[:, Q]
            out[:, Q] = g[:, P]
        return out[0] if single else out

    def region_extremes(self, samples: int = 256, seed: int = 0) -> Dict[str, float]:
        """Sampled max over X0/Y0 and min over X1/Y1 of the bound quadruple."""
        if self.quadruple is None:
            raise InvalidModel(f"model {self.name} is not bound to a quadruple")
        out = {}
        for label in self.bindings:
            pts = np.concatenate(self.quadruple.sample(label, samples, seed))
            vals = self.value(pts)
            out[label] = float(vals.max() if label.endswith("0") else vals.min())
        return out

    def binding_errors(self, samples: int = 256, seed: int = 0) -> Dict[str, float]:
        measured = self.region_extremes(samples, seed)
        return {lab: abs(measured[lab] - float(v)) for lab, v in self.bindings.items()}

    def describe(self) -> Dict[str, object]:
        out: Dict[str, object] = {"name": self.name, "dim": self.dim, "delta": self.delta}
        out.update({f"const.{k}": v for k, v in self.constants.items()})
        out.update({f"binding.{k}": v for k, v in self.bindings.items()})
        for key, prof in self.profiles.items():
            out[f"profile.{key}"] = prof.knots
        return out


def _central_gradient(fn: ArrayFn, z: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(z)
    for i in range(z.shape[1]):
        e = np.zeros(z.shape[1])
        e[i] = h
        g[:, i] = (fn(z + e) - fn(z - e)) / (2 * h)
    return g


def custom_model(value: ArrayFn, dim: int, *, gradient: Optional[ArrayFn] = None,
                 pairs: Optional[Sequence[Tuple[int, int]]] = None, domain: Optional[Domain] = None,
                 bindings: Optional[Mapping[str, float]] = None,
                 quadruple: Optional[AdmissibleQuadruple] = None, name: str = "custom") -> HamiltonianModel:
    """Wrap user functions; coordinates default to ``(p_1..p_n, q_1..q_n)``."""
    if dim % 2:
        raise InvalidModel("phase spaces have even dimension")
    n = dim // 2
    return HamiltonianModel(
        name=name,
        dim=dim,
        pairs=tuple(pairs) if pairs is not None else tuple((i, n + i) for i in range(n)),
        evaluator=value,
        gradient_fn=gradient,
        domain=domain or Domain.everywhere(dim),
        bindings=dict(bindings or {}),
        quadruple=quadruple,
    )


# --- Poisson bracket -------------------------------------------------------------------

def poisson_bracket(F: HamiltonianModel, G: HamiltonianModel, z, h: float = 1e-5):
    """Central-difference ``{F, G} = sum_i (F_q G_p - F_p G_q)`` at ``z``.

    ``z`` may be one point or an ``(N, d)`` batch.
    """
    if F.dim != G.dim or tuple(F.pairs) != tuple(G.pairs):
        raise InvalidModel("brackets need models on the same coordinates")
    if not h > 0:
        raise ValueError("step h must be positive")
    zz, single = _batch(z)
    if not (np.all(F.domain.contains(zz)) and np.all(G.domain.contains(zz))):
        raise OutsideDomain("bracket evaluated outside a model domain")
    dF = _central_gradient(F.evaluator, zz, h)
    dG = _central_gradient(G.evaluator, zz, h)
    total = np.zeros(len(zz))
    for P, Q in F.pairs:
        total += dF[:, Q] * dG[:, P] - dF[:, P] * dG[:, Q]
    return float(total[0]) if single else total


# --- the strip model -----------------------------------------------------------------

def _strip_bands(A: Fraction, k: int, eps: Fraction, top: float):
    """Bands ``(l, r, value)`` on ``[0, A]``: the two edges plus the Y intervals."""
    bands = [(0.0, 0.0, 0.0)]
    ys = [(float(l), float(r), 0.0 if i % 4 == 2 else top)
          for l, r, i in top_intervals(A, k, eps) if i % 4 in (0, 2)]
    bands.extend(sorted(ys))
    bands.append((float(A), float(A), top))
    return bands


def _strip_profile(A: Fraction, k: int, eps: Fraction, delta: Fraction, top: float,
                   tail: bool) -> SmoothedProfile:
    margin = 2 * float(delta)
    end = (float(A + eps - 2 * delta), 0.0) if tail else None
    return band_profile(_strip_bands(A, k, eps, top), margin, float(delta), end)


def _x1_shadow_slope(A: Fraction, k: int, eps: Fraction, delta: Fraction) -> Fraction:
    """Exact generator slope bound ``1/(shortest X1 interval - 4 delta)``."""
    shortest = min(r - l for l, r, i in top_intervals(A, k, eps) if i % 4 == 1)
    return 1 / (shortest - 4 * delta)


_COLLAR = 1.0


def build_surface_G(A, k: int, eps, delta) -> HamiltonianModel:
    """Strip-model Hamiltonian ``G(x, y) = g(x) chi(y)`` on a neighbourhood of ``[0, A] x [0, 1]``.

    ``g`` vanishes near the left edge and the Y0 intervals, equals 1 near the
    right edge and the Y1 intervals, climbs across the X1 intervals and falls
    across the X0 intervals, then returns to 0 just right of ``x = A``.
    ``chi`` is 1 on a neighbourhood of ``[0, 1]`` and fades out over a unit
    collar on each side, which keeps the flow off the strip slow enough for a
    fixed-step integrator.
    Coordinates are ``(x, y) = (p, q)``, so the flow is vertical at speed
    ``g'(x)`` where ``chi = 1``.
    """
    A, eps, delta = _exact(A), _exact(eps), _exact(delta)
    if k < 1 or A <= 0 or eps <= 0:
        raise InvalidModel("need A > 0, eps > 0 and k >= 1")
    if not A / k - 4 * eps > 0:
        raise InvalidModel(f"A/k - 4 eps = {A / k - 4 * eps} must be positive")
    if not 0 < delta < eps / 4:
        raise InvalidModel(f"delta = {delta} must lie in (0, eps/4)")
    quad = surface_model_partition(A, k, eps)
    g = _strip_profile(A, k, eps, delta, 1.0, tail=True)
    e = float(eps)
    soft = _COLLAR / 10
    flat = e / 4 + soft
    chi = SmoothedProfile.from_knots([(-_COLLAR, 0.0), (-flat, 1.0), (1 + flat, 1.0), (1 + _COLLAR, 0.0)], soft)
    slope = _x1_shadow_slope(A, k, eps, delta)
    bound = 1 / (A / k - 4 * eps)
    if not slope < bound:
        raise InvalidModel("slope bound on the X1 shadow fails")

    def value(z):
        return g(z[:, 0]) * chi(z[:, 1])

    def grad(z):
        return np.stack([g.derivative(z[:, 0]) * chi(z[:, 1]), g(z[:, 0]) * chi.derivative(z[:, 1])], axis=1)

    fa, fe = float(A), float(eps)
    reach = _COLLAR + soft + fe  # chi vanishes from _COLLAR + soft on
    return HamiltonianModel(
        name="surface",
        dim=2,
        pairs=((0, 1),),
        evaluator=value,
        gradient_fn=grad,
        domain=Domain(f"({-fe}, {fa + fe}) x ({-reach}, {1 + reach})",
                      ((-fe, fa + fe), (-reach, 1 + reach))),
        delta=float(delta),
        constants={"A": A, "k": k, "eps": eps, "x1_slope": slope, "slope_bound": bound},
        bindings={"Y0": 0.0, "Y1": 1.0},
        quadruple=quad,
        profiles={"g": g, "chi": chi},
    )


# --- the split model -------------------------------------------------------------------

def _split_constant_ok(C: Fraction, x1: Fraction, reach: Fraction) -> bool:
    # reach / sqrt(x1) > C > sqrt(x1), squared to stay exact
    return C > 0 and C * C > x1 and reach > 0 and reach * reach > C * C * x1


def simplest_split_constant(x1, xn, k: int, eps) -> Optional[Fraction]:
    """The admissible constant with the smallest denominator, or None."""
    x1, xn, eps = _exact(x1), _exact(xn), _exact(eps)
    reach = xn / k - 4 * eps
    if reach <= 0 or reach * reach <= x1 * x1:
        return None
    lo = math.sqrt(float(x1))
    for q in range(1, 10**6):
        p = math.floor(lo * q) - 1
        while not Fraction(p, q) * Fraction(p, q) > x1 or p <= 0:
            p += 1
        if _split_constant_ok(Fraction(p, q), x1, reach):
            return Fraction(p, q)
    return None


def build_split_H(x1, xn, k: int, eps, C=None, delta=None, middle: Sequence = ()) -> HamiltonianModel:
    """``H = p_1 + G(p_n)`` on ``R^{2n}``, coordinates ``(p_1..p_n, q_1..q_n)``.

    ``G`` rises from 0 to ``C`` across the strip ``[0, x_n]`` with the same
    band pattern as the surface model and is constant outside it, so ``H`` is
    complete and ``dH/dp_1 = 1`` identically.  ``middle`` lists the areas of
    any factors between the first and the last; ``H`` ignores them.
    """
    x1, xn, eps = _exact(x1), _exact(xn), _exact(eps)
    if k < 1 or x1 <= 0 or xn <= 0 or eps <= 0:
        raise InvalidModel("need x1, xn, eps > 0 and k >= 1")
    reach = xn / k - 4 * eps
    if C is None:
        C = simplest_split_constant(x1, xn, k, eps)
        if C is None:
            raise InvalidModel("no constant C satisfies the split-model inequalities")
    C = _exact(C)
    if not _split_constant_ok(C, x1, reach):
        raise InvalidModel(f"C = {C} violates (xn/k - 4 eps)/sqrt(x1) > C > sqrt(x1)")
    delta = eps / 10 if delta is None else _exact(delta)
    if not 0 < delta < eps / 4:
        raise InvalidModel(f"delta = {delta} must lie in (0, eps/4)")
    xs = [x1] + [_exact(x) for x in middle] + [xn]
    n = len(xs)
    quad = split_model_quadruple(xs, k, eps)
    G = _strip_profile(xn, k, eps, delta, float(C), tail=False)

    def value(z):
        return z[:, 0] + G(z[:, n - 1])

    def grad(z):
        g = np.zeros_like(z)
        g[:, 0] = 1.0
        g[:, n - 1] = G.derivative(z[:, n - 1])
        return g

    return HamiltonianModel(
        name="split",
        dim=2 * n,
        pairs=tuple((i, n + i) for i in range(n)),
        evaluator=value,
        gradient_fn=grad,
        domain=Domain.everywhere(2 * n),
        delta=float(delta),
        constants={"x": tuple(xs), "k": k, "eps": eps, "C": C, "x1_slope": float(C) * _x1_shadow_slope(xn, k, eps, delta)},
        bindings={"Y0": math.sqrt(float(x1)), "Y1": float(C)},
        quadruple=quad,
        profiles={"G": G},
    )


# --- the annulus pair ---------------------------------------------------------------------

def build_annulus_FG(eps, k: int, delta=None) -> Tuple[HamiltonianModel, HamiltonianModel]:
    """Commuting pair on ``(-eps, eps) x R/Z`` depending on ``x`` only.

    ``F`` is 0 near every X0 interval and 1 near every X1 interval; ``G`` is
    0 near Y0, 1 near Y1 and 0 near both ends.  Both are flat on
    ``delta``-neighbourhoods of their bands, so ``{F, G} = 0`` identically.
    """
    eps = _exact(eps)
    if eps <= 0 or k < 1:
        raise InvalidModel("need eps > 0 and k >= 1")
    quad = annulus_quadruple(eps, k)
    intervals = annulus_intervals(eps, k)
    width = 2 * eps / (4 * k + 1)
    delta = width / 10 if delta is None else _exact(delta)
    if not 0 < delta < width / 4:
        raise InvalidModel(f"delta = {delta} must lie in (0, width/4)")
    margin = 2 * float(delta)
    f_bands = [(float(l), float(r), 0.0 if lab == "X0" else 1.0) for l, r, lab in intervals if lab in ("X0", "X1")]
    g_bands = [(float(-eps), float(-eps), 0.0)]
    g_bands += [(float(l), float(r), 0.0 if lab == "Y0" else 1.0) for l, r, lab in intervals if lab in ("Y0", "Y1")]
    g_bands.append((float(eps), float(eps), 0.0))
    fprof = band_profile(f_bands, margin, float(delta))
    gprof = band_profile(g_bands, margin, float(delta))
    fe = float(eps)
    domain = Domain(f"({-fe}, {fe}) x R/Z", ((-fe, fe), (None, None)), (None, 1.0))

    def make(name, prof, bindings):
        def value(z):
            return prof(z[:, 0])

        def grad(z):
            return np.stack([prof.derivative(z[:, 0]), np.zeros(len(z))], axis=1)

        return HamiltonianModel(name, 2, ((0, 1),), value, grad, domain, float(delta),
                                {"eps": eps, "k": k}, bindings, quad, {name: prof})

    return make("F", fprof, {"X0": 0.0, "X1": 1.0}), make("G", gprof, {"Y0": 0.0, "Y1": 1.0})


# --- the Chekanov sector model --------------------------------------------------------------

class _SectorShape:
    """Level function ``Lambda(u, v)`` on the normalised sector and its time profile.

    Sector coordinates: ``u`` in ``[-1/2, 1/2]`` is the angle measured in
    sectors from the middle of the Y1 arc, ``v = (a - s)/a`` is the depth
    below the circle ``s = pi r^2 = a``.  Symplectic area is ``(a/m) du dv``.

    ``Lambda = sqrt(U^2 + V^2)`` where ``U`` measures the smoothed distance of
    ``|u|`` past the core half-width ``c`` against a half-width ``kappa(v)``
    that fans out from the X arcs towards the sector edges, and ``V`` measures
    depth (squared-law inside the disk, linear outside).  The profile
    ``g`` is fixed by asking every level curve ``Lambda = lam`` to be
    traversed in time ``(a/m) N / w(lam)`` with taper ``w <= 1``.
    """

    def __init__(self, eps_n: float, ds: float, outer: float):
        self.ds = ds
        self.eta = eps_n / 20
        self.c = 0.125 + ds
        self.k0 = 0.375 - self.eta - self.c
        self.k1 = 0.5 - self.eta - self.c
        self.depth = 1 - eps_n / 5
        self.fan = min(5 * eps_n, 0.5)
        self.fan_soft = 0.1
        self.cap = 0.9
        self.outer = outer
        self.core = eps_n / 10
        self.taper = 0.15 * eps_n
        self._build_profile()

    # pieces of Lambda
    def _ramp(self, v):
        s, t = self.fan_soft, v / self.fan
        r = lambda x: s * _biweight_ramp(x / s)
        dr = lambda x: _biweight_step(x / s) * ((x > -s))
        val = (r(t - s) - r(t - 1 + s)) / (1 - 2 * s)
        der = (dr(t - s) - dr(t - 1 + s)) / (1 - 2 * s) / self.fan
        return val, der

    def _V(self, v):
        inside = v >= 0
        vi = np.maximum(v, 0.0) / self.depth
        V = np.where(inside, vi * vi, -v / self.outer)
        dV = np.where(inside, 2 * vi / self.depth, -1.0 / self.outer)
        return V, dV

    def _kappa(self, v, V, dV):
        ramp, dramp = self._ramp(v)
        W = self.k0 + (self.k1 - self.k0) * ramp
        dW = (self.k1 - self.k0) * dramp
        c2 = self.cap**2
        th = np.tanh(V * V / c2)
        q = c2 * th
        dq = 2 * V * (1 - th * th) * dV
        kappa = W / np.sqrt(1 - q)
        dlog = dW / W + 0.5 * dq / (1 - q)
        return kappa, dlog

    def level(self, u, v):
        """``Lambda`` and its partial derivatives in ``u`` and ``v``."""
        V, dV = self._V(v)
        kappa, dlog = self._kappa(v, V, dV)
        t = (np.abs(u) - self.c) / self.ds
        R = self.ds * _biweight_ramp(t)
        U = R / kappa
        Uu = np.sign(u) * _biweight_step(t) * (t > -1) / kappa
        Uv = -U * dlog
        lam = np.sqrt(U * U + V * V)
        safe = np.where(lam > 0, lam, 1.0)
        lu = np.where(lam > 0, U * Uu / safe, 0.0)
        lv = np.where(lam > 0, (U * Uv + V * dV) / safe, 0.0)
        return lam, lu, lv

    def _half_width(self, lam, v):
        # u >= 0 on the level set Lambda = lam at depth v >= 0
        V, dV = self._V(v)
        kappa, _ = self._kappa(v, V, dV)
        y = kappa * np.sqrt(np.maximum(lam * lam - V * V, 0.0)) / self.ds
        return self.c + self.ds * self._ramp_inverse(y)

    def _ramp_inverse(self, y):
        if not hasattr(self, "_inv_t"):
            t = np.linspace(-1.0, 1.0, 40001)
            self._inv_t, self._inv_y = t, _biweight_ramp(t)
        return np.where(y >= 1.0, y, np.interp(y, self._inv_y, self._inv_t))

    def area_below(self, lams: np.ndarray) -> np.ndarray:
        """Normalised area of ``{Lambda <= lam, v >= 0}`` in the sector."""
        nodes, weights = np.polynomial.legendre.leggauss(96)
        t = (nodes + 1) / 2
        wts = weights / 2
        out = np.empty(len(lams))
        for i, lam in enumerate(lams):
            if lam <= 0:
                out[i] = 0.0
                continue
            top = self.depth * math.sqrt(lam)
            # v = top (1 - t^2) removes the square-root edge at the top
            v = top * (1 - t * t)
            jac = top * 2 * t
            out[i] = 2 * np.sum(wts * jac * self._half_width(lam, v))
        return out

    def _build_profile(self):
        lam = np.linspace(0.0, 1.0, 4001)
        A = self.area_below(lam)
        dA = np.gradient(A, lam)
        w = smoothstep((lam - self.core) / self.taper) * smoothstep((1 - lam) / self.taper)
        f = dA * w
        cum = np.concatenate([[0.0], np.cumsum((f[1:] + f[:-1]) / 2 * np.diff(lam))])
        self.floor = float(cum[-1])
        self.support_area = float(A[-1])
        vals = 1.0 - cum / cum[-1]
        vals[-1] = 0.0
        self._g = PchipInterpolator(lam, vals, extrapolate=False)
        self._dg = self._g.derivative()

    def profile(self, lam):
        inside = lam < 1.0
        lc = np.clip(lam, 0.0, 1.0)
        return np.where(inside, self._g(lc), 0.0), np.where(inside, self._dg(lc), 0.0)


def build_chekanov_H(a, m: int, n: int, k, eps=Fraction(1, 20), delta=Fraction(1, 200)) -> HamiltonianModel:
    """``H(x, y, theta, p) = G(R(-n theta)(x, y)) beta(p)`` on ``D(k) x T*_k S^1``.

    ``theta`` is measured in turns and ``(p, theta)`` are conjugate.  ``G`` has
    m-fold symmetry; on one sector it is the level-profile of
    :class:`_SectorShape`, 1 on the Y1 arc and 0 on the Y0 arcs.  ``beta`` is 1
    on ``|p| <= C = max(4a|n|, 1)`` and vanishes before ``|p| = k``.  The
    rotation is by ``-n theta`` so that ``H`` is 0 and 1 on the swept arcs
    ``R(n theta) gamma_j``.

    Inside ``|p| <= C`` the flow satisfies ``dp/dt = -n ds/dt`` exactly, with
    ``s = pi (x^2 + y^2)``, so orbits from the zero section over ``s = a``
    keep ``|p| <= |n| max(a, s_max - a)``.
    """
    a, k, eps, delta = _exact(a), _exact(k), _exact(eps), _exact(delta)
    if m < 1:
        raise InvalidModel("m must be a positive integer")
    if eps <= 0 or delta <= 0:
        raise InvalidModel("eps and delta must be positive")
    quad = chekanov_quadruple(a, m, n, k)
    C = max(4 * a * abs(n), Fraction(1))
    if not C < k:
        raise InvalidModel(f"cutoff C = {C} must be below k = {k}")
    fa, fk, fC = float(a), float(k), float(C)
    eps_n = min(float(eps) * m / fa, 0.1)
    ds = min(float(delta) * m / fa, eps_n / 20)
    outer = min(3.0, 0.9 * (fk - fa) / fa)
    shape = _SectorShape(eps_n, ds, outer)
    c_out = fC + (fk - fC) / 2
    two_pi = 2 * math.pi

    def sector(z):
        x, y, th = z[:, 0], z[:, 1], z[:, 2]
        r2 = x * x + y * y
        s = math.pi * r2
        xi = np.arctan2(y, x) / two_pi - n * th
        u = np.mod((xi - 3 / (8 * m)) * m + 0.5, 1.0) - 0.5
        v = (fa - s) / fa
        return x, y, r2, u, v

    def beta(p):
        t = (np.abs(p) - fC) / (c_out - fC)
        return 1.0 - smoothstep(t), -np.sign(p) * smoothstep_derivative(t) / (c_out - fC)

    def G_and_grad(z):
        x, y, r2, u, v = sector(z)
        lam, lu, lv = shape.level(u, v)
        g, dg = shape.profile(lam)
        Gu, Gv = dg * lu, dg * lv
        safe = np.where(r2 > 0, r2, 1.0)
        # du/dx = m dxi/dx with dxi/dx = -y/(2 pi r^2); dv/dx = -2 pi x / a
        Gx = np.where(r2 > 0, Gu * m * (-y) / (two_pi * safe), 0.0) + Gv * (-two_pi * x / fa)
        Gy = np.where(r2 > 0, Gu * m * x / (two_pi * safe), 0.0) + Gv * (-two_pi * y / fa)
        Gth = Gu * m * (-n)
        return g, Gx, Gy, Gth

    def value(z):
        g, *_ = G_and_grad(z)
        b, _ = beta(z[:, 3])
        return g * b

    def grad(z):
        g, Gx, Gy, Gth = G_and_grad(z)
        b, db = beta(z[:, 3])
        return np.stack([Gx * b, Gy * b, Gth * b, g * db], axis=1)

    constants: Dict[str, object] = {
        "a": a, "m": m, "n": n, "k": k, "eps": eps, "C": C,
        "chord_floor": fa / m * shape.floor,
        "support_area": fa / m * shape.support_area,
        "outer_depth": outer,
    }
    model = HamiltonianModel(
        name="chekanov",
        dim=4,
        pairs=((0, 1), (3, 2)),
        evaluator=value,
        gradient_fn=grad,
        domain=Domain(f"D({fk}) x T*_{fk} S^1", ((None, None), (None, None), (None, None), (-fk, fk)),
                      (None, None, 1.0, None), (0, 1, fk)),
        delta=float(delta),
        constants=constants,
        bindings={"Y0": 0.0, "Y1": 1.0},
        quadruple=quad,
    )
    constants.update(chekanov_gradient_report(model))
    return model


def chekanov_gradient_report(model: HamiltonianModel, resolution: int = 240) -> Dict[str, float]:
    """Sampled gradient diagnostics of a Chekanov model over one sector.

    ``planar_ratio`` is ``max sqrt(a) |grad_(x,y) G| / (4m)`` over the support
    and ``theta_ratio`` is ``max |dH/dtheta| / (2 pi) / (4 m |n| / sqrt(pi))``
    on ``D(a) x {|p| <= C}`` (0 when ``n = 0``).  The angular derivative is
    converted to radians before comparing.
    """
    c = model.constants
    a, m, n = float(c["a"]), int(c["m"]), int(c["n"])
    outer = float(c["outer_depth"])
    u = (np.arange(resolution) + 0.5) / resolution - 0.5
    v = np.linspace(-outer, 1.0, 2 * resolution, endpoint=False)
    U, V = np.meshgrid(u, v)
    s = a * (1 - V.ravel())
    xi = (U.ravel() / m) + 3 / (8 * m)
    r = np.sqrt(s / math.pi)
    z = np.stack([r * np.cos(2 * math.pi * xi), r * np.sin(2 * math.pi * xi),
                  np.zeros_like(r), np.zeros_like(r)], axis=1)
    g = model.gradient(z)
    planar = np.sqrt(a) * np.hypot(g[:, 0], g[:, 1]) / (4 * m)
    inside = s <= a
    theta = np.abs(g[:, 2]) / (2 * math.pi)
    theta_ratio = float(theta[inside].max() / (4 * m * abs(n) / math.sqrt(math.pi))) if n else 0.0
    return {"planar_ratio": float(planar.max()), "theta_ratio": theta_ratio}
