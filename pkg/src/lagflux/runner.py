"""Dispatch of ``bound`` and ``verify`` problems to the engine and the flow code."""

from __future__ import annotations

import importlib
import math
from fractions import Fraction
from typing import Callable, Dict, List

from . import dynamics as dyn
from .engine import (
    InvariantBound,
    chekanov_bound,
    cpn_fiber_bound,
    s2s2_fiber_bound,
    split_torus_bound,
    surface_bound,
    toric_fiber_bound,
)
from .errors import InvalidModel, LagfluxError
from .models import HamiltonianModel, build_annulus_FG, build_chekanov_H, build_split_H, build_surface_G
from .polytope import INF, RationalPolytope
from .problem import UNKNOWN, ProblemFile, ResultReport

DEFAULT_DT = Fraction(1, 1000)
DEFAULT_SAMPLES = 4096


class FamilyMismatch(LagfluxError, ValueError):
    """The command or a parameter does not fit the problem's family."""


def _need(params: Dict, key: str, family: str):
    if key not in params or params[key] is UNKNOWN:
        raise FamilyMismatch(f"family {family} needs parameter {key!r}")
    return params[key]


def _vector(v) -> List:
    return list(v) if isinstance(v, list) else [v]


def _int(v, key: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, Fraction)) or Fraction(v).denominator != 1:
        raise FamilyMismatch(f"parameter {key!r} must be an integer, got {v!r}")
    return int(v)


def _allowed(params: Dict, family: str, keys) -> None:
    extra = sorted(set(params) - set(keys))
    if extra:
        raise FamilyMismatch(f"parameter {extra[0]!r} does not belong to family {family}")


# --- bound ---------------------------------------------------------------------------

def _bound_toric(p: Dict) -> InvariantBound:
    _allowed(p, "toric", ("normals", "offsets", "x", "class", "mode"))
    normals = _need(p, "normals", "toric")
    offsets = _vector(_need(p, "offsets", "toric"))
    rows = [_vector(r) for r in (normals if isinstance(normals[0], list) else [normals])]
    if len(rows) != len(offsets):
        raise FamilyMismatch("normals and offsets differ in length")
    poly = RationalPolytope.from_halfspaces(zip(rows, offsets))
    return toric_fiber_bound(poly, _vector(_need(p, "x", "toric")), _vector(_need(p, "class", "toric")),
                             mode=str(p.get("mode", "interior_only")))


def _bound_split(p: Dict) -> InvariantBound:
    _allowed(p, "split", ("x", "class", "k", "C"))
    return split_torus_bound(_vector(_need(p, "x", "split")), _vector(_need(p, "class", "split")))


def _bound_chekanov(p: Dict) -> InvariantBound:
    _allowed(p, "chekanov", ("a", "m", "n", "k"))
    return chekanov_bound(_need(p, "a", "chekanov"), _int(_need(p, "m", "chekanov"), "m"),
                          _int(_need(p, "n", "chekanov"), "n"))


def _surface_areas(p: Dict):
    if "areas" in p:
        areas = _vector(p["areas"])
        if len(areas) != 2:
            raise FamilyMismatch("areas takes two values: the positive and the negative side")
        return areas
    if "A" in p:
        return [p["A"], INF]
    raise FamilyMismatch("family surface needs 'areas' or 'A'")


def _bound_surface(p: Dict) -> InvariantBound:
    _allowed(p, "surface", ("areas", "A", "separating", "k"))
    separating = p.get("separating", True)
    k = _int(_need(p, "k", "surface"), "k")
    if not separating:
        return surface_bound(INF, INF, False, k)
    plus, minus = _surface_areas(p)
    return surface_bound(plus, minus, True, k)


def _bound_cpn(p: Dict) -> InvariantBound:
    _allowed(p, "cpn", ("x", "class"))
    x = _vector(_need(p, "x", "cpn"))
    return cpn_fiber_bound(len(x), x, _vector(_need(p, "class", "cpn")))


def _bound_s2s2(p: Dict) -> InvariantBound:
    _allowed(p, "s2s2", ("x", "class"))
    return s2s2_fiber_bound(_vector(_need(p, "x", "s2s2")), _vector(_need(p, "class", "s2s2")))


BOUNDS: Dict[str, Callable[[Dict], InvariantBound]] = {
    "toric": _bound_toric,
    "split": _bound_split,
    "chekanov": _bound_chekanov,
    "surface": _bound_surface,
    "cpn": _bound_cpn,
    "s2s2": _bound_s2s2,
}


def run_bound(problem: ProblemFile) -> ResultReport:
    if problem.family not in BOUNDS:
        raise FamilyMismatch(f"family {problem.family} has no theorem bound; use verify")
    bound = BOUNDS[problem.family](problem.params)
    report = ResultReport("bound", problem.family)
    report.add_bound(bound)
    return report


# --- verify --------------------------------------------------------------------------

def _dyn(problem: ProblemFile, key: str, default):
    v = problem.dynamics.get(key, default)
    if v is UNKNOWN:
        return default
    return v


def _add_search(report: ResultReport, search: "dyn.ChordSearch", delta: float) -> None:
    report.simulation("delta_H", delta)
    report.simulation("starts", len(search))
    report.simulation("horizon", search.horizon)
    report.simulation("dt", search.dt)
    report.simulation("chords", search.chord_count)
    report.simulation("min_chord", search.min_time)
    report.simulation("escaped", search.escaped)
    report.simulation("flagged", search.flagged)


def _add_certificate(report: ResultReport, cert: "dyn.ChordCertificate") -> None:
    report.simulation("margin", cert.margin)
    report.simulation("certified", cert.certified)
    report.simulation("consistent", cert.consistent)
    report.ok = report.ok and cert.consistent


def _search(model: HamiltonianModel, problem: ProblemFile, T_max: float):
    dt = float(_dyn(problem, "dt", DEFAULT_DT))
    search = dyn.find_chords(model, samples=int(_dyn(problem, "samples", DEFAULT_SAMPLES)), T_max=T_max, dt=dt,
                             seed=int(_dyn(problem, "seed", 0)))
    return search, dyn.delta_H(model), dt


def _verify_surface(problem: ProblemFile, report: ResultReport) -> None:
    p = problem.params
    bound = _bound_surface(p)
    report.add_bound(bound)
    k = _int(_need(p, "k", "surface"), "k")
    eps = _dyn(problem, "eps", Fraction(1, 20))
    if not p.get("separating", True):
        F, G = build_annulus_FG(eps, abs(k), _dyn(problem, "delta", None))
        pb = dyn.estimate_pb_upper(F, G, grid=200)
        cert = dyn.bp_certificate(pb)
        report.simulation("pb_upper", pb)
        report.simulation("bp_certificate", cert)
        report.ok = cert >= bound.lower
        return
    A = _surface_areas(p)[0 if k > 0 else 1]
    if A == INF:
        raise FamilyMismatch("the strip model needs a finite area on the chosen side")
    delta = _dyn(problem, "delta", Fraction(1, 200))
    model = build_surface_G(A, abs(k), eps, delta)
    claim = float(A) / abs(k)
    search, delta_h, dt = _search(model, problem, float(_dyn(problem, "T_max", Fraction(5, 4) * A / abs(k))))
    _add_search(report, search, delta_h)
    _add_certificate(report, dyn.ChordCertificate(claim, delta_h, search.horizon, search.min_time,
                                                  dyn.surface_margin(eps, delta, dt)))


def _verify_split(problem: ProblemFile, report: ResultReport) -> None:
    p = problem.params
    _allowed(p, "split", ("x", "class", "k", "C"))
    x = _vector(_need(p, "x", "split"))
    if len(x) < 2:
        raise FamilyMismatch("the split model needs at least two factors")
    k = _int(p.get("k", 1), "k")
    cls = _vector(p.get("class", [0] * (len(x) - 1) + [k]))
    bound = split_torus_bound(x, cls)
    report.add_bound(bound)
    eps = _dyn(problem, "eps", Fraction(1, 10))
    model = build_split_H(x[0], x[-1], k, eps, C=p.get("C"), delta=_dyn(problem, "delta", None), middle=x[1:-1])
    report.simulation("C", float(model.constants["C"]))
    search, delta_h, dt = _search(model, problem, float(_dyn(problem, "T_max", 3)))
    _add_search(report, search, delta_h)
    claim = bound.lower if bound.lower is not None else 0.0
    _add_certificate(report, dyn.ChordCertificate(float(claim), delta_h, search.horizon, search.min_time, 0.0))
    T = math.sqrt(float(x[0])) + 10 * dt
    gap = dyn.pi1_displacement(model, T, dt)
    report.simulation("square_displacement_time", T)
    report.simulation("square_displacement", gap)
    report.ok = report.ok and gap > 0


def _verify_chekanov(problem: ProblemFile, report: ResultReport) -> None:
    p = problem.params
    bound = _bound_chekanov(p)
    report.add_bound(bound)
    a = Fraction(_need(p, "a", "chekanov"))
    m, n = _int(p["m"], "m"), _int(p["n"], "n")
    if m < 1:
        raise FamilyMismatch("the rotating-arc model needs m >= 1")
    k = p.get("k", 2 * max(a, 4 * a * abs(n)) + 1)
    model = build_chekanov_H(a, m, n, k, eps=_dyn(problem, "eps", Fraction(1, 20)),
                             delta=_dyn(problem, "delta", Fraction(1, 200)))
    search, delta_h, dt = _search(model, problem, float(_dyn(problem, "T_max", Fraction(6, 5) * a / m)))
    _add_search(report, search, delta_h)
    report.simulation("chord_floor", float(model.constants["chord_floor"]))
    _add_certificate(report, dyn.ChordCertificate(float(a / m), delta_h, search.horizon, search.min_time,
                                                  dyn.chekanov_margin(model, dt)))
    conf = dyn.chekanov_confinement(model, samples=min(int(_dyn(problem, "samples", DEFAULT_SAMPLES)), 1024), dt=dt)
    report.simulation("max_abs_p", conf.max_p)
    report.simulation("p_bound", conf.bound)
    report.simulation("confined", conf.holds)
    report.ok = report.ok and conf.holds


def load_factory(target_path: str) -> HamiltonianModel:
    """Import ``module:attribute`` and call it to obtain a bound model."""
    module, sep, attr = str(target_path).partition(":")
    if not sep or not module or not attr:
        raise FamilyMismatch(f"factory must look like 'module:function', got {target_path!r}")
    try:
        target = getattr(importlib.import_module(module), attr)
    except (ImportError, AttributeError) as exc:
        raise FamilyMismatch(f"cannot load factory {target_path!r}: {exc}") from None
    model = target() if callable(target) else target
    if not isinstance(model, HamiltonianModel):
        raise InvalidModel(f"factory {target_path!r} did not return a HamiltonianModel")
    return model


def _verify_custom(problem: ProblemFile, report: ResultReport) -> None:
    p = problem.params
    _allowed(p, "custom-model", ("factory",))
    model = load_factory(_need(p, "factory", "custom-model"))
    if model.quadruple is None:
        raise InvalidModel("a custom model needs a bound quadruple for verification")
    search, delta_h, _ = _search(model, problem, float(_dyn(problem, "T_max", 1)))
    _add_search(report, search, delta_h)
    if search.min_time is not None:
        report.simulation("bp_witness", search.min_time * delta_h)
    report.notes.append("no theorem value is claimed for a custom model")


VERIFIERS = {
    "surface": _verify_surface,
    "split": _verify_split,
    "chekanov": _verify_chekanov,
    "custom-model": _verify_custom,
}


def run_verify(problem: ProblemFile) -> ResultReport:
    if problem.family not in VERIFIERS:
        raise FamilyMismatch(f"family {problem.family} has no dynamics model; use bound")
    report = ResultReport("verify", problem.family)
    VERIFIERS[problem.family](problem, report)
    report.notes.append("simulation bounds are one-sided: only the constructed witness model is flowed, "
                        "so they support a lower bound and never an equality")
    if report.fields and any(f.name == "flagged" and f.value for f in report.fields):
        report.notes.append("some starts broke the energy contract after all step halvings")
    return report


def run(command: str, problem: ProblemFile) -> ResultReport:
    if command == "bound":
        return run_bound(problem)
    if command == "verify":
        return run_verify(problem)
    raise FamilyMismatch(f"unknown command {command!r}")
