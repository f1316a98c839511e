"""End-to-end acceptance criteria, each checked at its stated tolerance and time budget.

Every test records a verdict that the conftest prints as one PASS/FAIL line
per criterion at the end of the run.  A verdict includes the runtime, and
exceeding the budget counts as a failure.
"""

import math
import random
import time
from fractions import Fraction as F
from itertools import permutations

import numpy as np
import pytest

from lagflux import dynamics as dyn
from lagflux.engine import (
    TAGS,
    InvariantBound,
    chekanov_bound,
    cpn_fiber_bound,
    s2s2_fiber_bound,
    split_torus_bound,
    surface_bound,
    toric_fiber_bound,
)
from lagflux.lattice import smallest_shift
from lagflux.models import (
    build_annulus_FG,
    build_chekanov_H,
    build_split_H,
    build_surface_G,
    custom_model,
    poisson_bracket,
)
from lagflux.polytope import INF, RationalPolytope, ray_exit

from oracles import lattice_scan_shift, lattice_scan_shift_full, plane_case_table

CHECKS = 10_000


@pytest.fixture
def verdict(record_property):
    """``verdict(criterion, ok, detail, seconds, budget, part="")`` records and asserts."""

    def record(criterion, ok, detail, seconds, budget, part="", group_budget=None):
        ok = bool(ok) and seconds <= budget
        record_property("acceptance", {"criterion": str(criterion), "part": part, "ok": ok, "detail": detail,
                                       "seconds": seconds, "budget": budget, "group_budget": group_budget})
        assert ok, f"criterion {criterion}{part}: {detail} ({seconds:.2f} s of {budget} s)"

    return record


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


# --- exact criteria ----------------------------------------------------------------------

def test_criterion_1_plane_case_table(verdict):
    with Clock() as clock:
        mismatches = []
        for m in range(-3, 4):
            for n in range(-3, 4):
                if (m, n) == (0, 0):
                    continue
                _, lower, exact = plane_case_table(1, 3, m, n)
                b = split_torus_bound((1, 3), (m, n))
                if b.lower != lower or (exact and not b.exact):
                    mismatches.append((m, n))
        spots = {
            (1, 2): split_torus_bound((1, 3), (1, 2)),
            (0, 1): split_torus_bound((1, 3), (0, 1)),
            (-1, -2): split_torus_bound((1, 3), (-1, -2)),
            (1, 0): split_torus_bound((1, 3), (1, 0)),
        }
        spots_ok = (spots[(1, 2)].exact and spots[(1, 2)].value == 1 and spots[(1, 2)].lower_source == TAGS["plane_E"]
                    and spots[(0, 1)].value == INF and spots[(-1, -2)].value == INF
                    and spots[(1, 0)].lower == 1)
    verdict(1, not mismatches and spots_ok,
            f"48 classes vs hand table, mismatches {mismatches}; (1,2) {spots[(1, 2)]}; (0,1) {spots[(0, 1)]}; "
            f"(-1,-2) {spots[(-1, -2)]}; (1,0) {spots[(1, 0)]}", clock.seconds, 1)


def test_criterion_2_monotone_torus(verdict):
    with Clock() as clock:
        diagonal = [split_torus_bound((2, 2), (m, m)) for m in range(1, 6)]
        diag_ok = all(b.exact and b.value == F(2, m) for m, b in zip(range(1, 6), diagonal))
        off = [(m, n) for m in range(1, 6) for n in range(1, 6) if m != n
               and split_torus_bound((2, 2), (m, n)).lower != F(2, max(m, n))]
    verdict(2, diag_ok and not off,
            f"diagonal {[str(b.value) for b in diagonal]}, off-diagonal mismatches {off}", clock.seconds, 1)


def test_criterion_3_split_space(verdict):
    with Clock() as clock:
        a = split_torus_bound((1, 1, 1), (2, 2, 2))
        b = split_torus_bound((F(1, 3), 1, 1), (1, 0, 0))
    a_ok = a.exact and a.value == F(1, 2)
    b_ok = b.exact and b.value == INF
    verdict(3, a_ok and b_ok, f"(1,1,1) class (2,2,2): {a}; (1/3,1,1) class (1,0,0): {b} (claimed exact inf)",
            clock.seconds, 1)


def test_criterion_4_projective_plane(verdict):
    x, alpha = (F(1, 3), F(1, 3)), (1, 1)
    with Clock() as clock:
        b = cpn_fiber_bound(2, x, alpha)
        lower = ray_exit(RationalPolytope.simplex(2), x, alpha)
        upper = smallest_shift(x, alpha, F(1, 2))
        scan = lattice_scan_shift(x, alpha, F(1, 2), radius=100)
        full = lattice_scan_shift_full(x, alpha, F(1, 2), radius=12)
    ok = (b.exact and b.value == F(1, 3) and b.lower == lower and b.upper == upper
          and scan == upper and full == upper)
    verdict(4, ok, f"{b}; ray_exit {lower}, smallest_shift {upper}, lattice scans {scan} and {full}",
            clock.seconds, 1)


def test_criterion_5_sphere_product(verdict):
    with Clock() as clock:
        a = s2s2_fiber_bound((F(1, 2), F(1, 2)), (1, 1))
        b = s2s2_fiber_bound((F(3, 4), F(1, 4)), (1, -1))
    ok = a.exact and a.value == F(1, 2) and b.exact and b.value == F(3, 4)
    verdict(5, ok, f"(1/2,1/2) class (1,1): {a}; (3/4,1/4) class (1,-1): {b}", clock.seconds, 1)


# --- dynamics criteria -------------------------------------------------------------------

def test_criterion_6_surface_chords(verdict):
    eps, delta, dt, A, k = F(1, 20), F(1, 200), 1e-3, 3, 3
    with Clock() as clock:
        G = build_surface_G(A, k, eps, delta)
        dH = dyn.delta_H(G)
        search = dyn.find_chords(G, samples=4096, T_max=1.25 * A / k, dt=dt)
        cert = dyn.ChordCertificate(A / k, dH, search.horizon, search.min_time,
                                    dyn.surface_margin(eps, delta, dt))
    floor = A / k - 5 * float(eps)
    ok = (abs(dH - 1) <= 1e-9 and search.min_time is not None and search.min_time >= floor
          and cert.consistent)
    verdict(6, ok, f"delta_H {dH:.12f}, {search.chord_count}/{len(search)} chords, min chord "
                   f"{search.min_time} >= {floor}, margin {cert.margin:.3f}, consistent {cert.consistent}, "
                   f"flagged {search.flagged}", clock.seconds, 60)


def test_criterion_7_split_no_chords(verdict):
    dt = 1e-3
    with Clock() as clock:
        H = build_split_H(1, 3, 1, F(1, 10), C=2)
        search = dyn.find_chords(H, samples=4096, T_max=3.0, dt=dt)
        T = 1 + 10 * dt
        gap = dyn.pi1_displacement(H, T, dt)
    ok = search.chord_count == 0 and search.escaped == 0 and gap > 0
    verdict(7, ok, f"{search.chord_count} chords from {len(search)} starts up to T = 3 (escaped {search.escaped}, "
                   f"flagged {search.flagged}); square displacement {gap:.4f} at T = {T}", clock.seconds, 120)


def test_criterion_8_commuting_pair(verdict):
    with Clock() as clock:
        Fm, Gm = build_annulus_FG(F(1, 20), 1)
        pb = dyn.estimate_pb_upper(Fm, Gm, grid=200)
        cert = dyn.bp_certificate(pb)
    verdict(8, pb < 1e-8 and cert == INF, f"max |{{F,G}}| on 200 x 200 grid {pb:.3e}, certificate {cert}",
            clock.seconds, 5)


def test_criterion_10_chekanov_confinement(verdict):
    a, m, n, k = 1, 2, 1, 9
    dt = 1e-3
    with Clock() as clock:
        H = build_chekanov_H(a, m, n, k)
        eps = float(H.constants["eps"])
        conf = dyn.chekanov_confinement(H, samples=1024, dt=dt)
        search = dyn.find_chords(H, samples=4096, T_max=1.2 * a / m, dt=dt)
    floor = a / m - 2 * eps
    chords_ok = search.min_time is None or search.min_time >= floor
    ok = conf.holds and conf.horizon >= 0.5 and conf.escaped == 0 and chords_ok
    verdict(10, ok, f"max |p| {conf.max_p:.4f} <= C = {conf.bound} over t <= {conf.horizon} from {conf.starts} "
                    f"starts; min chord {search.min_time} >= {floor:.3f} ({search.chord_count} chords)",
            clock.seconds, 120)


# --- property suites ---------------------------------------------------------------------

SUITE_BUDGET = 60
POLYGONS = [
    RationalPolytope.box((0, 0), (1, 1)),
    RationalPolytope.simplex(2),
    RationalPolytope.orthant(2),
    RationalPolytope.simplex(3),
    RationalPolytope.from_halfspaces([((1, 0), 1), ((-1, 0), 0), ((0, 1), 1), ((0, -1), 0),
                                      ((1, 1), F(3, 2)), ((-1, -1), F(-1, 2))]),
]


def _rand_fraction(rng, lo=1, hi=40, den=12):
    return F(rng.randint(lo, hi), rng.randint(1, den))


def _rand_class(rng, n, span=4):
    while True:
        c = [rng.randint(-span, span) for _ in range(n)]
        if any(c):
            return c


def test_criterion_9a_ray_exit_homogeneity(verdict):
    rng = random.Random(91)
    bad = []
    with Clock() as clock:
        done = 0
        while done < CHECKS:
            P = rng.choice(POLYGONS)
            x = [F(rng.randint(1, 39), 40) / P.dim for _ in range(P.dim)]
            if not P.contains_interior(x):
                continue
            alpha = _rand_class(rng, P.dim)
            c = _rand_fraction(rng, 1, 30, 10)
            l, lc = ray_exit(P, x, alpha), ray_exit(P, x, [c * a for a in alpha])
            if lc != (INF if l == INF else l / c):
                bad.append((x, alpha, c))
            done += 1
    verdict(9, not bad, f"{CHECKS} checks of l(x, c a) = l(x, a)/c, failures {bad[:3]}", clock.seconds,
            SUITE_BUDGET, part="a", group_budget=SUITE_BUDGET)


def test_criterion_9b_permutation_invariance(verdict):
    rng = random.Random(92)
    bad = []
    with Clock() as clock:
        for _ in range(CHECKS):
            n = rng.choice((2, 3, 4))
            x = [_rand_fraction(rng) for _ in range(n)]
            m = _rand_class(rng, n)
            sigma = rng.choice(list(permutations(range(n))))
            b = split_torus_bound(x, m)
            bs = split_torus_bound([x[i] for i in sigma], [m[i] for i in sigma])
            if (b.lower, b.upper, b.exact) != (bs.lower, bs.upper, bs.exact):
                bad.append((x, m, sigma))
    verdict(9, not bad, f"{CHECKS} permuted split bounds, failures {bad[:3]}", clock.seconds, SUITE_BUDGET,
            part="b", group_budget=SUITE_BUDGET)


def test_criterion_9c_area_homogeneity(verdict):
    rng = random.Random(93)
    bad, agree_times_c = [], 0
    with Clock() as clock:
        for _ in range(CHECKS):
            n = rng.choice((2, 3, 4))
            x = [_rand_fraction(rng) for _ in range(n)]
            m = _rand_class(rng, n)
            c = _rand_fraction(rng, 1, 30, 10)
            b = split_torus_bound(x, m).lower
            bc = split_torus_bound([c * v for v in x], m).lower
            if b is None or b in (0, INF):
                ok = bc == b
            else:
                ok = bc == b / c
                agree_times_c += bc == b * c
            if not ok:
                bad.append((x, m, c, b, bc))
    first = bad[0] if bad else None
    verdict(9, not bad, f"{CHECKS} checks of bp(c x) = bp(x)/c: {len(bad)} failures, e.g. x, class, c, bp(x), "
                        f"bp(cx) = {first}; {agree_times_c} of the finite cases scale as bp(x) * c instead",
            clock.seconds, SUITE_BUDGET, part="c", group_budget=SUITE_BUDGET)


def _random_bound(rng) -> InvariantBound:
    kind = rng.randrange(6)
    if kind == 0:
        n = rng.choice((2, 3, 4))
        return split_torus_bound([_rand_fraction(rng) for _ in range(n)], _rand_class(rng, n))
    if kind == 1:
        P = rng.choice(POLYGONS)
        x = [F(rng.randint(1, 39), 40) / P.dim for _ in range(P.dim)]
        if not P.contains_interior(x):
            x = P.interior_point()
        return toric_fiber_bound(P, x, _rand_class(rng, P.dim), rng.choice(("interior_only", "full_ambient")))
    if kind == 2:
        n = rng.choice((2, 3))
        w = [rng.randint(1, 20) for _ in range(n + 1)]
        x = [F(v, sum(w)) for v in w[:n]]
        return cpn_fiber_bound(n, x, _rand_class(rng, n))
    if kind == 3:
        x = [F(rng.randint(1, 19), 20) for _ in range(2)]
        return s2s2_fiber_bound(x, _rand_class(rng, 2))
    if kind == 4:
        return chekanov_bound(_rand_fraction(rng), rng.randint(-3, 3), rng.randint(-3, 3))
    k = rng.choice([v for v in range(-4, 5) if v])
    areas = [rng.choice((INF, _rand_fraction(rng))) for _ in range(2)]
    return surface_bound(areas[0], areas[1], rng.random() < 0.8, k)


def test_criterion_9d_sandwich(verdict):
    rng = random.Random(94)
    bad = []
    with Clock() as clock:
        for _ in range(CHECKS):
            b = _random_bound(rng)
            if b.lower is not None and b.upper is not None and not b.lower <= b.upper:
                bad.append(b)
            if b.exact and b.lower != b.upper:
                bad.append(b)
    verdict(9, not bad, f"{CHECKS} bounds from every engine entry point, violations {bad[:3]}", clock.seconds,
            SUITE_BUDGET, part="d", group_budget=SUITE_BUDGET)


def _trig_model(rng):
    """Random sum of plane waves on R^4 with its exact gradient."""
    terms = [(rng.uniform(-1, 1), np.array([rng.uniform(-2, 2) for _ in range(4)]), rng.uniform(0, 2 * math.pi))
             for _ in range(3)]

    def value(z):
        return sum(a * np.sin(z @ w + ph) for a, w, ph in terms)

    def grad(z):
        return sum(a * np.cos(z @ w + ph)[:, None] * w for a, w, ph in terms)

    third = sum(abs(a) * np.abs(w).max() ** 3 for a, w, _ in terms)
    return custom_model(value, 4), grad, third


def test_criterion_9e_bracket_antisymmetry(verdict):
    rng = random.Random(95)
    h = 1e-4
    worst_anti, worst_ratio, checked = 0.0, 0.0, 0
    with Clock() as clock:
        for _ in range(CHECKS // 100):
            (Fm, gF, tF), (Gm, gG, tG) = _trig_model(rng), _trig_model(rng)
            z = np.array([[rng.uniform(-2, 2) for _ in range(4)] for _ in range(100)])
            fg = poisson_bracket(Fm, Gm, z, h)
            gf = poisson_bracket(Gm, Fm, z, h)
            dF, dG = gF(z), gG(z)
            exact = sum(dF[:, Q] * dG[:, P] - dF[:, P] * dG[:, Q] for P, Q in Fm.pairs)
            # each central difference errs by at most h^2/6 times a third derivative
            scale = h * h * (tF * np.abs(dG).sum(axis=1) + tG * np.abs(dF).sum(axis=1)) / 6 + 1e-10
            worst_anti = max(worst_anti, float(np.max(np.abs(fg + gf) / (h * h))))
            worst_ratio = max(worst_ratio, float(np.max(np.abs(fg - exact) / scale)))
            checked += len(z)
    ok = checked == CHECKS and worst_anti <= 1.0 and worst_ratio <= 1.0
    verdict(9, ok, f"{checked} points: max |{{F,G}} + {{G,F}}| / h^2 = {worst_anti:.2e}, truncation error "
                   f"at most {worst_ratio:.2f} of the h^2 bound (h = {h})", clock.seconds, SUITE_BUDGET,
            part="e", group_budget=SUITE_BUDGET)
