"""Acceptance criteria, one test (or small group) per criterion.

Each test records a PASS/FAIL line; the lines are repeated in a summary
section at the end of the pytest run.
"""

import itertools
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from flint import arb, ctx

from normapprox.arith import NumberField, _det, embed, norm, trace
from normapprox.contfrac import cf_terms, convergents
from normapprox.lattices import (
    ModuleLattice,
    _eval_form_grid,
    combine,
    dual_stability_check,
    has_nonzero_root_mod,
    integer_norm_form,
    multiplier_ring,
    norm_spectrum,
)
from normapprox.orbits import (
    ApproxWindow,
    accumulation_curves_cubic,
    accumulation_set_quadratic,
    convergence_report,
    enumerate_algebraic,
    oracle_scan,
    pair_set,
    witness_sign_class,
)
from normapprox.probes import monte_carlo
from normapprox.units import dominant_stream, sign_pattern

from conftest import bundle, record_acceptance

F = Fraction
JOBS = Path(__file__).resolve().parent.parent / "jobs"


# 1. algebraic enumeration equals the brute-force scan

@pytest.mark.parametrize("name,C", [("golden", 1), ("sqrt2", 1), ("cbrt2", 3), ("heptagon", 3)])
def test_criterion_1_oracle_equivalence(name, C):
    b = bundle(name)
    w = ApproxWindow(C, 10**5)
    t0 = time.perf_counter()
    alg = enumerate_algebraic(b.lat, w, b.group)
    t_alg = time.perf_counter() - t0
    orc = oracle_scan(b.lat, w)
    elapsed = time.perf_counter() - t0
    same = pair_set(alg) == pair_set(orc)
    ok = same and elapsed < 60 and len(alg) > 0
    record_acceptance(f"1 [{name}, C={C}]", ok,
                      f"{len(alg)} algebraic vs {len(orc)} scanned pairs, equal={same}, "
                      f"enum {t_alg:.2f}s, total {elapsed:.2f}s (< 60s)")
    assert ok


# 2. golden ratio: 1/sqrt5 from convergents and from the dual lattice

def test_criterion_2_golden_accumulation():
    b = bundle("golden")
    f = b.field
    phi = lambda prec: embed(f.gen, 0, prec)
    terms = cf_terms(phi, 31)
    conv = list(convergents(terms))
    target = 5 ** -0.5
    with ctx.workprec(256):
        worst = 0.0
        for p, q in conv[20:31]:
            v = q * abs(q * phi(256) - p)
            worst = max(worst, abs(float(v.mid()) - target))
        mn = norm_spectrum(b.lat.dual().elements, 1).min_norm
        theory = arb(5).sqrt() * arb(mn.numerator) / mn.denominator
        exact = 1 / arb(5).sqrt()
        full = (theory - exact).contains(0) and theory.rad() < 2.0 ** -250
    first = accumulation_set_quadratic(b.lat, 10)[0]
    sym = first.coeff == F(1, 5) and first.D == 5
    ok = worst < 1e-6 and full and sym and abs(first.value - target) < 1e-15
    record_acceptance("2", ok,
                      f"convergents 20..30 within {worst:.2e} of 1/sqrt5 (< 1e-6), "
                      f"sqrt5*min|N| = {theory.mid().str(20)} matches 1/sqrt5 at 256 bits: {full}, "
                      f"smallest accumulation point {first.symbolic()}")
    assert ok


# 3. x^3 - 2: levels 1..6 attained, 7 provably missing

def test_criterion_3_missing_level():
    t0 = time.perf_counter()
    f = NumberField([-2, 0, 0, 1])
    lat = ModuleLattice(f)
    dual = lat.dual().elements
    spec = norm_spectrum(dual, 7, 8)
    wits = {}
    for k in range(1, 7):
        c = spec.witness(k)
        assert abs(norm(combine(dual, c))) == k * spec.min_norm
        wits[k] = c
    # the classical form of the power basis, scaled like the dual one
    form = {(3, 0, 0): 1, (0, 3, 0): 2, (0, 0, 3): 4, (1, 1, 1): -6}
    no_root = not has_nonzero_root_mod(form, 3, 7)
    elapsed = time.perf_counter() - t0
    ok = (spec.missing == [7] and spec.certificates == {7: 7} and no_root and len(wits) == 6
          and elapsed < 10)
    record_acceptance("3", ok,
                      f"witnesses {wits}; level 7 missing at cap 8: {spec.missing == [7]}; "
                      f"x^3+2y^3+4z^3-6xyz has no nonzero root mod 7: {no_root}; {elapsed:.2f}s (< 10s)")
    assert ok


# 4. x^3 - 2, s = first dual basis element: gamma converges, beta on the circle

def test_criterion_4_curve_convergence():
    t0 = time.perf_counter()
    b = bundle("cbrt2")
    s = b.lat.dual().elements[0]
    rows, skipped = convergence_report(s, b.lat, b.group, 15)
    elapsed = time.perf_counter() - t0
    nonzero = all(not r.gamma_error.contains(0) for r in rows)
    bounded = all(abs(r.gamma_error) < r.envelope for r in rows)
    env = [float(r.envelope.mid()) for r in rows]
    env_decreasing = all(y < x for x, y in zip(env, env[1:]))
    errs = [abs(float(r.gamma_error.mid())) for r in rows]
    literal = all(y < x for x, y in zip(errs, errs[1:]))
    on_circle = all(r.surface_residual.contains(0) for r in rows)
    ok = (len(rows) == 15 and skipped == 0 and nonzero and bounded and env_decreasing
          and errs[-1] < 1e-6 and env[-1] < 1e-6 and on_circle and elapsed < 10)
    record_acceptance("4", ok,
                      f"15 rows, gamma error certified nonzero: {nonzero}; under a strictly "
                      f"decreasing certified envelope: {bounded and env_decreasing} "
                      f"({env[0]:.2e} -> {env[-1]:.2e}); final |error| {errs[-1]:.2e} (< 1e-6); "
                      f"row-to-row monotone: {literal}; x1^2+x2^2-1 inside ball: {on_circle}; "
                      f"{elapsed:.2f}s (< 10s)")
    assert ok


# 5. totally real cubics: sign classes of the hyperbola witnesses

LEVEL_MAX = 30
CAP = 8


def _classes_by_level(name):
    fam = accumulation_curves_cubic(bundle(name).lat, LEVEL_MAX, CAP)
    return {int(d.level): d for d in fam.dilations}


def test_criterion_5a_heptagon_both_classes():
    t0 = time.perf_counter()
    levels = _classes_by_level("heptagon")
    single = [k for k, d in levels.items() if len(d.sign_classes) != 2]
    elapsed = time.perf_counter() - t0
    ok = bool(levels) and not single and elapsed < 120
    record_acceptance("5a [x^3+x^2-2x-1]", ok,
                      f"{len(levels)} attained levels up to {LEVEL_MAX} (cap {CAP}), "
                      f"levels with a single class: {single}; {elapsed:.2f}s")
    assert ok


def _positive_units_in_box(b, cap):
    """Units of the multiplier ring with coordinates in [-cap, cap] and sigma_0 > 0."""
    basis = b.ring.elements
    form, scale = integer_norm_form(basis)
    rng = np.arange(-cap, cap + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * len(basis)), indexing="ij")
    vals = _eval_form_grid(form, grids)
    hits = np.argwhere(np.abs(vals) == int(scale)) - cap
    out = []
    for c in hits:
        u = combine(basis, [int(x) for x in c])
        assert abs(norm(u)) == 1
        if embed(u, 0, 64) > 0:
            out.append(u)
    return out


def test_criterion_5b_positive_units_totally_positive():
    t0 = time.perf_counter()
    b = bundle("d15529")
    assert integer_norm_form(b.ring.elements)[1].denominator == 1
    found = _positive_units_in_box(b, 20)
    found += list(b.group.units)
    found += [d.unit for d in dominant_stream(b.group, 1.0, 12)]
    bad = [u for u in found if sign_pattern(u) != (1, 1, 1)]
    elapsed = time.perf_counter() - t0
    ok = len(found) > 1 and not bad and elapsed < 120
    record_acceptance("5b [x^3-19x+21]", ok,
                      f"{len(found)} positive units (coordinate box 20, fundamental units, "
                      f"dominant stream), not totally positive: {len(bad)}; {elapsed:.2f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="norm 9 and 27 ideals in different narrow classes; "
                                       "see the README section on known deviations")
def test_criterion_5c_one_class_per_level():
    t0 = time.perf_counter()
    levels = _classes_by_level("d15529")
    both = sorted(k for k, d in levels.items() if len(d.sign_classes) == 2)
    b = bundle("d15529")
    # the two witnesses of a mixed level are never unit multiples of each other
    unrelated = True
    for k in both:
        w = levels[k].witnesses
        x = combine(b.lat.dual().elements, w["plus"])
        y = combine(b.lat.dual().elements, w["minus"])
        unrelated &= witness_sign_class(b.lat, w["plus"]) != witness_sign_class(b.lat, w["minus"])
        unrelated &= not (b.ring.contains(x / y) and b.ring.contains(y / x))
    elapsed = time.perf_counter() - t0
    ok = bool(levels) and not both and elapsed < 120
    record_acceptance("5c [x^3-19x+21]", ok,
                      f"{len(levels)} attained levels up to {LEVEL_MAX} (cap {CAP}), levels with "
                      f"both classes: {both}; their witnesses lie in distinct unit orbits: "
                      f"{unrelated}; {elapsed:.2f}s")
    assert ok


# 6. exact algebra suite

ALGEBRA_CASES = [
    ([-1, -1, 1], None), ([-2, 0, 1], None), ([-2, 0, 0, 1], None),
    ([-1, -2, 1, 1], None), ([-5, 0, 1], [[1], [0, 2]]),
]


def test_criterion_6_exact_algebra():
    t0 = time.perf_counter()
    ok = True
    for poly, basis in ALGEBRA_CASES:
        lat = ModuleLattice(NumberField(poly), basis)
        n = len(lat.basis)
        A = lat.gram().entries
        dual = lat.dual()
        ok &= _det(A) != 0
        for i, j in itertools.product(range(n), repeat=2):
            delta = 1 if i == j else 0
            ok &= sum(A[i][k] * dual.inverse_gram[k][j] for k in range(n)) == delta
            ok &= trace(lat.basis[i] * dual.elements[j]) == delta
        ring = multiplier_ring(lat)
        for x, y in itertools.product(ring.elements, repeat=2):
            ok &= ring.contains(x * y)
        for g in ring.elements:
            ok &= dual_stability_check(g, lat)
    elapsed = time.perf_counter() - t0
    ok = bool(ok) and elapsed < 5
    record_acceptance("6", ok,
                      f"{len(ALGEBRA_CASES)} lattices: A*A^-1 = I, Tr pairing = delta, ring closure, "
                      f"ring acts on the dual, all exact; {elapsed:.2f}s (< 5s)")
    assert ok


# 7. transference probes

@pytest.mark.parametrize("d", [1, 2])
def test_criterion_7_transference(d):
    t0 = time.perf_counter()
    mc = monte_carlo(d, 1000, 100, seed=2024 + d)
    elapsed = time.perf_counter() - t0
    ok = (mc.dispersion_violations == 0 and mc.dispersion_skipped == 0
          and mc.linear_form_violations == 0 and elapsed < 60)
    record_acceptance(f"7 [d={d}]", ok,
                      f"100 samples at Q=1000: dispersion violations {mc.dispersion_violations} "
                      f"(undecided {mc.dispersion_skipped}, worst ratio {mc.worst_dispersion_ratio:.3f}), "
                      f"linear form violations {mc.linear_form_violations} "
                      f"(worst ratio {mc.worst_linear_ratio:.3f}); {elapsed:.2f}s (< 60s)")
    assert ok


# 8. determinism of the figure jobs

@pytest.mark.parametrize("job", ["fig1_left", "fig1_right"])
def test_criterion_8_determinism(job, tmp_path, capsys):
    from normapprox.cli import main
    cfg = str(JOBS / f"{job}.json")
    outputs = []
    for run in range(2):
        csv_path = tmp_path / f"{run}.csv"
        svg_path = tmp_path / f"{run}.svg"
        assert main(["approx", "--config", cfg, "--out", str(csv_path)]) == 0
        assert main(["plot", "--config", cfg, "--out", str(svg_path)]) == 0
        outputs.append((csv_path.read_bytes(), svg_path.read_bytes()))
    capsys.readouterr()
    (c1, s1), (c2, s2) = outputs
    ok = c1 == c2 and s1 == s2 and c1.count(b"\n") > 1 and b"<circle" in s1
    record_acceptance(f"8 [{job}]", ok,
                      f"CSV {len(c1)} bytes identical: {c1 == c2}; SVG {len(s1)} bytes identical: "
                      f"{s1 == s2}")
    assert ok
