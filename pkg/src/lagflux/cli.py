"""Command line front end: ``lagflux bound | verify | diagram | selftest``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from .errors import LagfluxError
from .problem import DYNAMICS_KEYS, FAMILIES, ProblemFile, parse_value
from .runner import FamilyMismatch, run

log = logging.getLogger("lagflux")

# flag name -> params key
PARAM_FLAGS = {
    "x": "x",
    "klass": "class",
    "areas": "areas",
    "A": "A",
    "k": "k",
    "a": "a",
    "m": "m",
    "n": "n",
    "C": "C",
    "normals": "normals",
    "offsets": "offsets",
    "mode": "mode",
    "factory": "factory",
}


def _add_problem_flags(p: argparse.ArgumentParser, dynamics: bool) -> None:
    p.add_argument("--problem", metavar="FILE", help="read the problem from a file; flags then override it")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--x", help="areas, comma separated (p/q rationals allowed)")
    p.add_argument("--class", dest="klass", metavar="CLASS", help="integer class, comma separated")
    p.add_argument("--areas", help="surface: areas of the positive and the negative side")
    sep = p.add_mutually_exclusive_group()
    sep.add_argument("--separating", dest="separating", action="store_const", const=True, default=None)
    sep.add_argument("--non-separating", dest="separating", action="store_const", const=False)
    p.add_argument("--A", dest="A", help="surface: area of the strip")
    p.add_argument("--k", help="multiple of the class (surface, split) or disk radius (chekanov)")
    p.add_argument("--a", help="chekanov: area parameter")
    p.add_argument("--m", help="chekanov: first class entry")
    p.add_argument("--n", help="chekanov: second class entry")
    p.add_argument("--C", dest="C", help="split: value of the model on Y1")
    p.add_argument("--normals", help="toric: facet normals as 'a,b; c,d; ...'")
    p.add_argument("--offsets", help="toric: facet offsets, comma separated")
    p.add_argument("--mode", choices=("interior_only", "full_ambient"))
    p.add_argument("--factory", help="custom-model: 'module:function' returning a model")
    if dynamics:
        p.add_argument("--eps", help="quadruple width parameter")
        p.add_argument("--delta", help="smoothing width")
        p.add_argument("--dt", help="integration step")
        p.add_argument("--samples", help="starts per source component")
        p.add_argument("--T-max", dest="T_max", help="search horizon")
        p.add_argument("--seed", help="sampling seed")
    p.add_argument("--json", action="store_true", help="emit a JSON report")


def problem_from_args(args: argparse.Namespace) -> ProblemFile:
    if args.problem:
        base = ProblemFile.read(args.problem)
        family, params, dyn = base.family, dict(base.params), dict(base.dynamics)
        if args.family and args.family != family:
            raise FamilyMismatch(f"--family {args.family} contradicts the problem file ({family})")
    else:
        if not args.family:
            raise FamilyMismatch("either --problem or --family is required")
        family, params, dyn = args.family, {}, {}
    for attr, key in PARAM_FLAGS.items():
        raw = getattr(args, attr, None)
        if raw is not None:
            params[key] = parse_value(raw)
    if args.separating is not None:
        params["separating"] = args.separating
    for key in DYNAMICS_KEYS:
        raw = getattr(args, key, None)
        if raw is not None:
            dyn[key] = parse_value(raw)
    return ProblemFile(family, params, dyn)


def _emit(report, as_json: bool) -> None:
    print(report.to_json() if as_json else report.to_text())


def cmd_problem(args: argparse.Namespace) -> int:
    report = run(args.command, problem_from_args(args))
    _emit(report, args.json)
    return 0 if report.ok else 1


def _window(text: str) -> Tuple[int, int, int, int]:
    parts = [int(v) for v in text.split(",")]
    if len(parts) == 2:
        return parts[0], parts[1], parts[0], parts[1]
    if len(parts) == 4:
        return tuple(parts)  # type: ignore[return-value]
    raise argparse.ArgumentTypeError("window is 'lo,hi' or 'm_lo,m_hi,n_lo,n_hi'")


def cmd_diagram(args: argparse.Namespace) -> int:
    from .svg import render_region_svg

    x = parse_value(args.x)
    x = x if isinstance(x, list) else [x]
    text = render_region_svg(x, args.window, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.out}")
    return 0


# --- selftest ------------------------------------------------------------------------

def _selftest_checks() -> List[Tuple[str, Callable[[], bool]]]:
    from .engine import cpn_fiber_bound, s2s2_fiber_bound, split_torus_bound, surface_bound
    from .lattice import smallest_shift
    from .models import build_annulus_FG, build_surface_G
    from . import dynamics as dyn
    from .polytope import INF, RationalPolytope, ray_exit

    F = Fraction

    def plane_cases():
        x = (1, 3)
        return (split_torus_bound(x, (1, 2)).value == 1 and split_torus_bound(x, (0, 1)).value == INF
                and split_torus_bound(x, (-1, -2)).value == INF and split_torus_bound(x, (1, 0)).lower == 1)

    def monotone():
        return all(split_torus_bound((2, 2), (m, m)).value == F(2, m) for m in range(1, 6))

    def space():
        return (split_torus_bound((1, 1, 1), (2, 2, 2)).value == F(1, 2)
                and split_torus_bound((F(1, 3), 1, 1), (0, 1, 0)).value == INF)

    def projective():
        b = cpn_fiber_bound(2, (F(1, 3), F(1, 3)), (1, 1))
        return (b.exact and b.value == F(1, 3)
                and ray_exit(RationalPolytope.simplex(2), (F(1, 3), F(1, 3)), (1, 1)) == F(1, 3)
                and smallest_shift((F(1, 3), F(1, 3)), (1, 1), F(1, 2)) == F(1, 3))

    def product():
        return (s2s2_fiber_bound((F(1, 2), F(1, 2)), (1, 1)).value == F(1, 2)
                and s2s2_fiber_bound((F(3, 4), F(1, 4)), (1, -1)).value == F(3, 4))

    def surfaces():
        return surface_bound(2, 5, True, -2).value == F(5, 2) and surface_bound(1, 1, False, 3).value == INF

    def commuting():
        Fm, Gm = build_annulus_FG(F(1, 10), 1)
        return dyn.bp_certificate(dyn.estimate_pb_upper(Fm, Gm, grid=100)) == INF

    def strip_chords():
        G = build_surface_G(3, 3, F(1, 20), F(1, 200))
        search = dyn.find_chords(G, samples=64, T_max=1.0, dt=1e-3)
        return abs(dyn.delta_H(G) - 1) < 1e-9 and search.min_time is not None and search.min_time >= 0.75

    return [
        ("plane case table", plane_cases),
        ("monotone diagonal", monotone),
        ("split tori in C^3", space),
        ("projective plane fiber", projective),
        ("sphere product fiber", product),
        ("surface curves", surfaces),
        ("commuting pair certificate", commuting),
        ("strip model chords (reduced sampling)", strip_chords),
    ]


def cmd_selftest(args: argparse.Namespace) -> int:
    failures = 0
    for name, check in _selftest_checks():
        start = time.perf_counter()
        try:
            ok = bool(check())
            detail = ""
        except LagfluxError as exc:
            ok, detail = False, f" ({exc})"
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}  [{time.perf_counter() - start:.2f} s]{detail}")
    print(f"{'all checks passed' if not failures else f'{failures} check(s) failed'}")
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lagflux", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    b = sub.add_parser("bound", help="exact or two-sided bound from the case engine")
    _add_problem_flags(b, dynamics=False)
    b.set_defaults(func=cmd_problem)
    v = sub.add_parser("verify", help="simulate a model and check it against the theorem value")
    _add_problem_flags(v, dynamics=True)
    v.set_defaults(func=cmd_problem)
    d = sub.add_parser("diagram", help="SVG of case labels over a window of classes")
    d.add_argument("--x", required=True, help="two positive areas, comma separated")
    d.add_argument("--window", type=_window, default=(-3, 3, -3, 3), help="'lo,hi' or 'm_lo,m_hi,n_lo,n_hi'")
    d.add_argument("--out", help="output path (default: stdout)")
    d.set_defaults(func=cmd_diagram)
    s = sub.add_parser("selftest", help="quick end-to-end checks")
    s.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (LagfluxError, ValueError, OSError) as exc:
        print(f"lagflux {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
