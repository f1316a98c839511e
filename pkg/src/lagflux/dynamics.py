"""Hamiltonian flows, chord searches and the certificates built from them.

Integration is classical fixed-step RK4 on the symplectic gradient.  Every
trajectory is held to the energy contract
``|H(z(t)) - H(z(0))| <= 1e-6 * max(1, |H(z(0))|) * T``; samples that break it
are rerun with half the step, at most six times, and flagged if they still
fail.  Chord searches stream the flow and test each step's chart segment
against the target boxes, so no trajectory is ever stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._parallel import thread_map
from .errors import DomainEscape, InvalidModel, InvalidPair, OutsideDomain
from .models import HamiltonianModel
from .quadruples import AdmissibleQuadruple, Box

MAX_HALVINGS = 6
CHUNK = 16384


def energy_tolerance(h0: np.ndarray, T: float) -> np.ndarray:
    return 1e-6 * np.maximum(1.0, np.abs(h0)) * T


def _rk4(model: HamiltonianModel, z: np.ndarray, h: float) -> np.ndarray:
    k1 = model.sgrad(z)
    k2 = model.sgrad(z + 0.5 * h * k1)
    k3 = model.sgrad(z + 0.5 * h * k2)
    k4 = model.sgrad(z + h * k3)
    return z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_count(T: float, dt: float) -> Tuple[int, float]:
    if not (T > 0 and dt > 0):
        raise ValueError("horizon and step must be positive")
    n = max(1, math.ceil(T / dt - 1e-9))
    return n, T / n


# --- plain integration ---------------------------------------------------------------

@dataclass
class Trajectory:
    """Recorded flow lines: ``states[i, j]`` is sample ``j`` at ``times[i]``.

    For a single start the sample axis is dropped.  ``dt`` holds the step
    each sample was finally integrated with and ``flagged`` marks samples that
    still broke the energy contract after all halvings.
    """

    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    dt: np.ndarray
    flagged: np.ndarray

    @property
    def energy_drift(self) -> np.ndarray:
        return np.max(np.abs(self.energy - self.energy[:1]), axis=0)

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]


def _integrate_fixed(model, z0, T, dt, record_every):
    n, h = _step_count(T, dt)
    z = z0.copy()
    times, states, energy = [0.0], [z.copy()], [model.value(z)]
    for i in range(1, n + 1):
        z = _rk4(model, z, h)
        inside = model.domain.contains(z)
        if not np.all(inside):
            return None, (i * h, np.array(times), np.array(states), np.array(energy), ~inside)
        if i % record_every == 0 or i == n:
            times.append(i * h)
            states.append(z.copy())
            energy.append(model.value(z))
    return (np.array(times), np.array(states), np.array(energy), h), None


def integrate(model: HamiltonianModel, z0, T: float, dt: float, record_every: int = 1) -> Trajectory:
    """Flow ``z0`` (one point or an ``(N, d)`` batch) for time ``T``.

    When any sample breaks the energy contract the whole batch is rerun with
    half the step (and twice the record stride, so recorded times agree).
    Raises :class:`DomainEscape` carrying the trajectory up to the last step
    inside the domain when any sample leaves the model domain.
    """
    z0 = np.asarray(z0, dtype=float)
    single = z0.ndim == 1
    batch = np.atleast_2d(z0)
    if not np.all(model.domain.contains(batch)):
        raise OutsideDomain("start point outside the model domain")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    tol = energy_tolerance(model.value(batch), T)
    step = dt
    for attempt in range(MAX_HALVINGS + 1):
        ok, escape = _integrate_fixed(model, batch, T, step, record_every)
        if escape is not None:
            t_esc, times, states, energy, _ = escape
            n = len(batch)
            partial = _shape(Trajectory(times, states, energy, np.full(n, step), np.zeros(n, bool)), single)
            raise DomainEscape(f"trajectory left {model.domain.description} at t = {t_esc:.6g}", partial)
        times, states, energy, h = ok
        bad = np.max(np.abs(energy - energy[:1]), axis=0) > tol
        if not bad.any() or attempt == MAX_HALVINGS:
            break
        step /= 2
        record_every *= 2
    return _shape(Trajectory(times, states, energy, np.full(len(batch), h), bad), single)


def _shape(traj: Trajectory, single: bool) -> Trajectory:
    if single:
        return Trajectory(traj.times, traj.states[:, 0], traj.energy[:, 0], traj.dt, traj.flagged)
    return traj


# --- chord search --------------------------------------------------------------------

def _slab(a: np.ndarray, b: np.ndarray, di: np.ndarray, safe: np.ndarray):
    t1, t2 = a / safe, b / safe
    return np.where(di > 0, t1, t2), np.where(di > 0, t2, t1)


def _segment_entry(c0: np.ndarray, c1: np.ndarray, boxes: Sequence[Box],
                   periods: Sequence[Optional[float]], tol: np.ndarray) -> np.ndarray:
    """First parameter ``tau`` in ``[0, 1]`` where ``c0 + tau (c1 - c0)`` meets a box.

    Boxes are inflated by ``tol`` (one value per segment).  Periodic chart
    directions take the short way round and test the box and its two
    neighbouring copies; a box covering a whole period ignores that direction.
    Returns NaN for segments that miss every box.
    """
    n, dim = c0.shape
    d = c1 - c0
    c0 = c0.copy()
    for i, per in enumerate(periods):
        if per is not None:
            d[:, i] = np.mod(d[:, i] + per / 2, per) - per / 2
            c0[:, i] = np.mod(c0[:, i], per)
    best = np.full(n, np.nan)
    for box in boxes:
        lo = np.array([float(v) for v in box.lo])
        hi = np.array([float(v) for v in box.hi])
        wrapped = [i for i, per in enumerate(periods) if per is not None and hi[i] - lo[i] < per]
        skip = {i for i, per in enumerate(periods) if per is not None and hi[i] - lo[i] >= per}
        shift_sets = [[]]
        for i in wrapped:
            shift_sets = [s + [(i, k * periods[i])] for s in shift_sets for k in (-1, 0, 1)]
        for shifts in shift_sets:
            l, h = lo.copy(), hi.copy()
            for i, off in shifts:
                l[i] += off
                h[i] += off
            enter = np.zeros(n)
            leave = np.ones(n)
            for i in range(dim):
                if i in skip:
                    continue
                di = d[:, i]
                moving = di != 0
                safe = np.where(moving, di, 1.0)
                lo_t, hi_t = _slab(l[i] - c0[:, i], h[i] - c0[:, i], di, safe)
                # the exact slab decides the crossing time; inflation only rescues a
                # coordinate that has already passed the box, never one still approaching it
                a = l[i] - tol - c0[:, i]
                b = h[i] + tol - c0[:, i]
                lo_w, hi_w = _slab(a, b, di, safe)
                passed = hi_t < 0
                lo_t = np.where(passed, lo_w, lo_t)
                hi_t = np.where(passed, hi_w, hi_t)
                static_ok = (a <= 0) & (b >= 0)
                enter = np.where(moving, np.maximum(enter, lo_t), np.where(static_ok, enter, np.inf))
                leave = np.where(moving, np.minimum(leave, hi_t), leave)
            tau = np.where(enter <= leave, enter, np.nan)
            best = np.fmin(best, tau)
    return best


@dataclass
class _ChunkResult:
    hit: np.ndarray
    drift: np.ndarray
    escaped: np.ndarray
    max_abs: np.ndarray
    dt: np.ndarray
    flagged: np.ndarray


def _flow_chunk(model: HamiltonianModel, z0: np.ndarray, T: float, dt: float,
                quad: Optional[AdmissibleQuadruple], target: Optional[str], check_every: int = 10) -> _ChunkResult:
    n_steps, h = _step_count(T, dt)
    N = len(z0)
    z = z0.copy()
    h0 = model.value(z)
    hit = np.full(N, np.nan)
    drift = np.zeros(N)
    escaped = np.zeros(N, dtype=bool)
    max_abs = np.abs(z)
    alive = np.ones(N, dtype=bool)
    chart = quad.chart if quad is not None else None
    boxes = quad[target].boxes if target is not None else ()
    c_prev = chart.forward(z) if target is not None else None
    for step in range(1, n_steps + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        zn = _rk4(model, z[idx], h)
        inside = model.domain.contains(zn)
        if not inside.all():
            escaped[idx[~inside]] = True
            alive[idx[~inside]] = False
            idx, zn = idx[inside], zn[inside]
        if target is not None:
            c1 = chart.forward(zn)
            c0 = c_prev[idx]
            per = chart.periods
            # periodic jumps are not displacement
            disp = c1 - c0
            for i, p in enumerate(per):
                if p is not None:
                    disp[:, i] = np.mod(disp[:, i] + p / 2, p) - p / 2
            tol = np.max(np.abs(disp), axis=1) + 1e-12
            tau = _segment_entry(c0, c1, boxes, per, tol)
            got = ~np.isnan(tau)
            if got.any():
                hit[idx[got]] = (step - 1 + tau[got]) * h
                alive[idx[got]] = False
            c_prev[idx] = c1
        z[idx] = zn
        max_abs[idx] = np.maximum(max_abs[idx], np.abs(zn))
        if step % check_every == 0 or step == n_steps:
            live = np.flatnonzero(alive | ~np.isnan(hit))
            drift[live] = np.maximum(drift[live], np.abs(model.value(z[live]) - h0[live]))
    bad = drift > energy_tolerance(h0, T)
    return _ChunkResult(hit, drift, escaped, max_abs, np.full(N, h), bad)


def _flow_with_halving(model, z0, T, dt, quad, target) -> _ChunkResult:
    res = _flow_chunk(model, z0, T, dt, quad, target)
    step = dt
    for _ in range(MAX_HALVINGS):
        bad = np.flatnonzero(res.flagged)
        if bad.size == 0:
            break
        step /= 2
        redo = _flow_chunk(model, z0[bad], T, step, quad, target)
        for name in ("hit", "drift", "escaped", "max_abs", "dt", "flagged"):
            getattr(res, name)[bad] = getattr(redo, name)
    return res


def _flow_all(model, z0, T, dt, quad, target) -> _ChunkResult:
    chunks = [np.arange(i, min(i + CHUNK, len(z0))) for i in range(0, len(z0), CHUNK)]
    parts = thread_map(lambda idx: _flow_with_halving(model, z0[idx], T, dt, quad, target), chunks)
    return _ChunkResult(*(np.concatenate([getattr(p, f) for p in parts])
                          for f in ("hit", "drift", "escaped", "max_abs", "dt", "flagged")))


@dataclass
class ChordReport:
    """One start of a chord search and the first time it entered the target."""

    index: int
    box: int
    start: np.ndarray
    hit_time: Optional[float]
    diagnostics: Dict[str, object] = field(default_factory=dict)


@dataclass
class ChordSearch:
    """All reports of a search, ordered by start index."""

    reports: List[ChordReport]
    horizon: float
    dt: float

    def __iter__(self):
        return iter(self.reports)

    def __len__(self):
        return len(self.reports)

    def __getitem__(self, i):
        return self.reports[i]

    @property
    def hit_times(self) -> np.ndarray:
        return np.array([r.hit_time for r in self.reports if r.hit_time is not None])

    @property
    def chord_count(self) -> int:
        return len(self.hit_times)

    @property
    def min_time(self) -> Optional[float]:
        t = self.hit_times
        return float(t.min()) if t.size else None

    @property
    def escaped(self) -> int:
        return sum(bool(r.diagnostics["escaped"]) for r in self.reports)

    @property
    def flagged(self) -> int:
        return sum(bool(r.diagnostics["flagged"]) for r in self.reports)

    def max_abs(self) -> np.ndarray:
        """Largest absolute value reached by each coordinate over all starts."""
        return np.max(np.stack([r.diagnostics["max_abs"] for r in self.reports]), axis=0)


def find_chords(model: HamiltonianModel, quadruple: Optional[AdmissibleQuadruple] = None, samples: int = 4096,
                T_max: float = 1.0, dt: float = 1e-3, seed: int = 0,
                source: str = "X0", target: str = "X1") -> ChordSearch:
    """Search for chords from ``source`` to ``target`` up to time ``T_max``.

    ``samples`` low-discrepancy starts are drawn in every box of the source
    region.  A start whose trajectory leaves the domain or breaks the energy
    contract is reported with that diagnostic instead of aborting the search.
    """
    quad = quadruple or model.quadruple
    if quad is None:
        raise InvalidModel("a quadruple is required for a chord search")
    parts = quad.sample(source, samples, seed)
    z0 = np.concatenate(parts)
    box_of = np.concatenate([np.full(len(p), b) for b, p in enumerate(parts)])
    start_ok = quad.contains(source, z0)
    if not start_ok.all():
        raise InvalidModel("sampled starts fail the source membership test")
    res = _flow_all(model, z0, T_max, dt, quad, target)
    reports = [
        ChordReport(
            index=i,
            box=int(box_of[i]),
            start=z0[i],
            hit_time=None if np.isnan(res.hit[i]) else float(res.hit[i]),
            diagnostics={
                "dt": float(res.dt[i]),
                "energy_drift": float(res.drift[i]),
                "flagged": bool(res.flagged[i]),
                "escaped": bool(res.escaped[i]),
                "max_abs": res.max_abs[i],
            },
        )
        for i in range(len(z0))
    ]
    return ChordSearch(reports, float(T_max), float(dt))


def flow_extremes(model: HamiltonianModel, starts: np.ndarray, T: float, dt: float) -> Dict[str, np.ndarray]:
    """Per-start maximum of ``|z_i(t)|`` over ``[0, T]``, with escape and drift flags."""
    res = _flow_all(model, np.atleast_2d(np.asarray(starts, dtype=float)), T, dt, None, None)
    return {"max_abs": res.max_abs, "escaped": res.escaped, "drift": res.drift, "flagged": res.flagged}


# --- oscillation, brackets and certificates --------------------------------------------

def _region_points(quad: AdmissibleQuadruple, label: str, samples: int, seed: int) -> np.ndarray:
    parts = quad.sample(label, samples, seed)
    if not parts:
        raise InvalidModel(f"region {label} has no components to sample")
    return np.concatenate(parts)


def delta_H(model: HamiltonianModel, quadruple: Optional[AdmissibleQuadruple] = None,
            samples: int = 256, seed: int = 0) -> float:
    """Sampled ``min_Y1 H - max_Y0 H``."""
    quad = quadruple or model.quadruple
    if quad is None:
        raise InvalidModel("a quadruple is required")
    y1 = model.value(_region_points(quad, "Y1", samples, seed))
    y0 = model.value(_region_points(quad, "Y0", samples, seed))
    return float(y1.min() - y0.max())


def _check_pair(F: HamiltonianModel, G: HamiltonianModel, quad: AdmissibleQuadruple, samples: int, tol: float):
    checks = ((F, "X0", "le", 0.0), (F, "X1", "ge", 1.0), (G, "Y0", "le", 0.0), (G, "Y1", "ge", 1.0))
    for model, label, rel, bound in checks:
        vals = model.value(_region_points(quad, label, samples, 0))
        bad = vals > bound + tol if rel == "le" else vals < bound - tol
        if bad.any():
            op = "<=" if rel == "le" else ">="
            raise InvalidPair(f"{model.name} {op} {bound} fails on {label} (value {vals[bad][0]:.6g})")


def estimate_pb_upper(F: HamiltonianModel, G: HamiltonianModel, grid: int = 200,
                      quadruple: Optional[AdmissibleQuadruple] = None, samples: int = 256,
                      h: float = 1e-5, tol: float = 1e-12) -> float:
    """Max of ``{F, G}`` over a cell-centred grid of the common domain.

    The pair is first checked against ``F <= 0`` on X0, ``F >= 1`` on X1,
    ``G <= 0`` on Y0 and ``G >= 1`` on Y1.  Any admissible pair bounds the
    four-set Poisson invariant from above, so this is an upper estimate.
    """
    from .models import poisson_bracket

    quad = quadruple or F.quadruple
    if quad is None:
        raise InvalidModel("a quadruple is required to check the pair")
    _check_pair(F, G, quad, samples, tol)
    axes = []
    dom = F.domain
    for (lo, hi), per in zip(dom.bounds, dom.periods):
        if per is not None:
            lo, hi = 0.0, per
        if lo is None or hi is None:
            raise InvalidModel("grid estimates need a bounded domain")
        axes.append(lo + (np.arange(grid) + 0.5) / grid * (hi - lo))
    pts = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    inside = F.domain.contains(pts) & G.domain.contains(pts)
    vals = poisson_bracket(F, G, pts[inside], h)
    return max(0.0, float(np.max(vals)))


def bp_certificate(pb_upper: float, tol: float = 1e-8) -> float:
    """Lower bound ``1/pb`` implied by an upper estimate (``inf`` when it vanishes)."""
    return math.inf if pb_upper <= tol else 1.0 / pb_upper


@dataclass
class ChordCertificate:
    """A theorem value checked against a simulated witness.

    ``min_chord`` is None when no chord was seen before ``horizon``.  A finite
    claim is consistent when it is at most ``observed_time * delta_H + margin``;
    an infinite claim is consistent when no chord was seen at all.
    """

    claimed: float
    delta_H: float
    horizon: float
    min_chord: Optional[float]
    margin: float

    @property
    def observed_time(self) -> float:
        return self.min_chord if self.min_chord is not None else self.horizon

    @property
    def certified(self) -> float:
        return self.observed_time * self.delta_H

    @property
    def consistent(self) -> bool:
        if math.isinf(self.claimed):
            return self.min_chord is None
        return self.claimed <= self.certified + self.margin


def surface_margin(eps: float, delta: float, dt: float) -> float:
    """Gap between ``A/k`` and the shortest ramp time of the strip model, plus two steps."""
    return 3 * float(eps) + 4 * float(delta) + 2 * float(dt)


def chekanov_margin(model: HamiltonianModel, dt: float) -> float:
    """Gap between ``a/m`` and the model's guaranteed chord length, plus two steps."""
    c = model.constants
    return float(c["a"]) / int(c["m"]) - float(c["chord_floor"]) + 2 * float(dt)


def _square_boundary_distance(x: np.ndarray, y: np.ndarray, side: float) -> np.ndarray:
    inside = (x >= 0) & (x <= side) & (y >= 0) & (y <= side)
    d_in = np.minimum.reduce([x, side - x, y, side - y])
    dx = np.maximum.reduce([np.zeros_like(x), -x, x - side])
    dy = np.maximum.reduce([np.zeros_like(y), -y, y - side])
    return np.where(inside, d_in, np.hypot(dx, dy))


def pi1_displacement(model: HamiltonianModel, T: float, dt: float, samples: int = 1024) -> float:
    """Smallest distance from the time-``T`` image of the first square boundary to itself.

    Only meaningful for split models, whose ``(p_1, q_1)`` motion is the unit
    translation ``q_1 -> q_1 + t``.  A positive value certifies disjointness.
    """
    x = model.constants.get("x")
    if model.name != "split" or x is None:
        raise InvalidModel("the square displacement test needs a split model")
    n = model.dim // 2
    side = math.sqrt(float(x[0]))
    t = (np.arange(samples) + 0.5) / samples * 4
    edge, pos = np.floor(t).astype(int), (t % 1) * side
    p1 = np.choose(edge, [pos, pos, np.zeros(samples), np.full(samples, side)])
    q1 = np.choose(edge, [np.zeros(samples), np.full(samples, side), pos, pos])
    z0 = np.zeros((samples, 2 * n))
    z0[:, 0], z0[:, n] = p1, q1
    end = integrate(model, z0, T, dt, record_every=10**9).end
    return float(_square_boundary_distance(end[:, 0], end[:, n], side).min())


@dataclass
class Confinement:
    """Largest ``|p|`` seen on flows from the whole rotating-arc torus."""

    max_p: float
    bound: float
    horizon: float
    starts: int
    escaped: int
    flagged: int

    @property
    def holds(self) -> bool:
        return self.escaped == 0 and self.max_p <= self.bound


def chekanov_confinement(model: HamiltonianModel, samples: int = 1024, dt: float = 1e-3) -> Confinement:
    """Flow every arc of ``partial D(a) x {0}`` for time ``a/m`` and track ``|p|``."""
    quad = model.quadruple
    if model.name != "chekanov" or quad is None:
        raise InvalidModel("confinement is defined for rotating-arc models")
    starts = np.concatenate([np.concatenate(quad.sample(lab, samples, 0)) for lab in ("X0", "Y1", "X1", "Y0")])
    T = float(model.constants["a"]) / int(model.constants["m"])
    ext = flow_extremes(model, starts, T, dt)
    p_index = model.pairs[1][0]
    return Confinement(float(ext["max_abs"][:, p_index].max()), float(model.constants["C"]), T,
                       len(starts), int(ext["escaped"].sum()), int(ext["flagged"].sum()))
