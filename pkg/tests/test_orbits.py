import math
from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest
from flint import arb, ctx
from hypothesis import given, settings, strategies as st

from normapprox.arith import norm, trace
from normapprox.errors import NonIntegerTrace, WrongDimension, ZeroQ
from normapprox.lattices import combine
from normapprox.orbits import (
    ApproxWindow,
    accumulation_curves_cubic,
    accumulation_set_quadratic,
    annotate,
    cluster_values,
    convergence_report,
    curve_distance,
    dual_element,
    enumerate_algebraic,
    gamma_beta,
    m_alpha,
    m_alpha_floats,
    oracle_scan,
    pair_set,
    recover_qp,
    reflect,
    sc_radii,
    surface_residual,
    tube_units,
)

from conftest import bundle

F = Fraction


@pytest.mark.parametrize("name,C,qmax", [
    ("golden", 1, 3000), ("sqrt2", F(1, 2), 3000), ("cbrt2", 2, 3000),
    ("heptagon", 2, 3000), ("d15529", 1, 2000), ("two_sqrt5", 1, 3000),
])
def test_oracle_equivalence_small(name, C, qmax):
    b = bundle(name)
    w = ApproxWindow(C, qmax)
    alg = enumerate_algebraic(b.lat, w, b.group)
    orc = oracle_scan(b.lat, w)
    assert pair_set(alg) == pair_set(orc)
    assert [a.key for a in alg] == [a.key for a in orc]  # same deterministic order


@pytest.mark.parametrize("name", ["golden", "cbrt2", "heptagon"])
@settings(max_examples=8, deadline=None)
@given(C=st.fractions(min_value=F(1, 10), max_value=3, max_denominator=20),
       qmax=st.integers(1, 400))
def test_oracle_equivalence_random_windows(name, C, qmax):
    b = bundle(name)
    w = ApproxWindow(C, qmax)
    assert pair_set(enumerate_algebraic(b.lat, w, b.group)) == pair_set(oracle_scan(b.lat, w))


def test_empty_windows(golden):
    assert enumerate_algebraic(golden.lat, ApproxWindow(0, 100), golden.group) == []
    assert oracle_scan(golden.lat, ApproxWindow(0, 100)) == []
    # no q = 1 .. 100 satisfies q |q phi - p| <= 0.38
    w = ApproxWindow(F(38, 100), 100)
    assert enumerate_algebraic(golden.lat, w, golden.group) == []
    assert oracle_scan(golden.lat, w) == []
    with pytest.raises(ValueError):
        ApproxWindow(-1, 10)


def test_provenance_and_values(cbrt2):
    b = cbrt2
    res = enumerate_algebraic(b.lat, ApproxWindow(3, 10**6), b.group, details=True)
    assert res.zero_q > 0
    dual = b.lat.dual().elements
    for a in res.approximations[::25]:
        s = combine(dual, a.s_coords)
        u = b.group.unit(a.u_exps)
        assert recover_qp(s, u, b.lat) == (a.q, a.p)
        assert max(abs(v) for v in a.value) <= 3 + 1e-9
        # value = gamma * beta * M(alpha)
        gb = gamma_beta(s, u, b.lat)
        M = m_alpha(b.lat)
        with ctx.workprec(160):
            for j in range(2):
                rec = gb.gamma * (gb.beta[0] * M[0][j] + gb.beta[1] * M[1][j])
                assert (rec - gb.value[j]).contains(0)
            assert surface_residual(gb.beta, b.field).contains(0)


def test_recover_and_errors(cbrt2):
    lat = cbrt2.lat
    d = lat.dual().elements
    one = cbrt2.field.one
    assert recover_qp(d[0], one, lat) == (1, (0, 0))
    with pytest.raises(ZeroQ):
        gamma_beta(d[1], one, lat)
    with pytest.raises(NonIntegerTrace):
        recover_qp(d[0] / 2, one, lat)


def test_dual_element_round_trip(heptagon):
    x = dual_element(heptagon.lat, 7, (-3, 2))
    assert [trace(x * b) for b in heptagon.lat.basis] == [7, -3, 2]


def test_m_alpha_golden(golden):
    M = m_alpha(golden.lat)
    with ctx.workprec(128):
        assert (M[0][0] - arb(5).sqrt()).contains(0)


@pytest.mark.parametrize("name", ["cbrt2", "heptagon", "d15529"])
def test_m_alpha_invertible(name):
    M = m_alpha(bundle(name).lat)
    det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
    assert not det.contains(0)


def test_tube_and_sc_radii(heptagon):
    g = heptagon.group
    units = tube_units(g, math.log(1e6))
    assert (0, 0) in units
    radii = sc_radii(heptagon.lat, g, 2)
    assert all(r > 0 for r in radii)
    more = sc_radii(heptagon.lat, g, 3)
    assert all(a < b for a, b in zip(radii, more))


@pytest.mark.parametrize("name,C", [("golden", 1), ("sqrt2", 1)])
def test_quadratic_accumulation_matches_oracle_clusters(name, C):
    b = bundle(name)
    pts = accumulation_set_quadratic(b.lat, 20)
    targets = sorted({p.value for p in pts if p.value <= C} | {-p.value for p in pts if p.value <= C})
    orc = [a for a in oracle_scan(b.lat, ApproxWindow(C, 10**5)) if abs(a.q) >= 50]
    clusters = cluster_values([a.value[0] for a in orc], 0.05)
    assert len(clusters) == len(targets)
    by_q = sorted(orc, key=lambda a: abs(a.q))
    for t in targets:
        near = [a for a in by_q if abs(a.value[0] - t) < 0.05]
        assert abs(near[-1].value[0] - t) < 1e-6


def test_golden_accumulation_symbolic(golden):
    pts = accumulation_set_quadratic(golden.lat, 10)
    first = pts[0]
    assert first.coeff == F(1, 5) and first.D == 5
    assert abs(first.value - 5 ** -0.5) < 1e-15
    with pytest.raises(WrongDimension):
        accumulation_set_quadratic(bundle("cbrt2").lat, 3)


@pytest.mark.parametrize("name", ["golden", "sqrt2", "cbrt2"])
def test_geometric_growth_per_orbit(name):
    b = bundle(name)
    C = 1 if b.lat.d == 1 else 3
    res = enumerate_algebraic(b.lat, ApproxWindow(C, 10**6), b.group)
    orbits = defaultdict(list)
    for a in res:
        if a.q > 0:
            orbits[a.s_coords].append(a.q)
    # along one orbit q grows roughly like the dominant unit
    unit = float(b.group.units[0].embed(0, 64).mid())
    assert orbits
    for qs in orbits.values():
        qs.sort()
        for x, y in zip(qs, qs[1:]):
            if x > 100:
                assert y / x > 0.9 * unit


def test_cubic_curves(cbrt2, heptagon):
    fam = accumulation_curves_cubic(cbrt2.lat, 10)
    assert fam.kind == "ellipse"
    assert [int(d.level) for d in fam.dilations] == [1, 2, 3, 4, 5, 6, 8, 9, 10]
    assert fam.missing == [7] and fam.certificates == {7: 7}
    fam = accumulation_curves_cubic(heptagon.lat, 10)
    assert fam.kind == "hyperbola-pair"
    for d in fam.dilations:
        assert d.sign_classes == ("minus", "plus")
    with pytest.raises(WrongDimension):
        accumulation_curves_cubic(bundle("golden").lat, 3)
    assert reflect((0.5, 2.0)) == (0.5, -2.0)


def test_convergence_report_cbrt2(cbrt2):
    s = cbrt2.lat.dual().elements[0]
    rows, skipped = convergence_report(s, cbrt2.lat, cbrt2.group, 15)
    assert len(rows) == 15 and skipped == 0
    target = abs(norm(s)) ** 0.5
    for r in rows:
        assert not r.gamma_error.contains(0)
        assert abs(float(r.gamma.mid()) - target) < 0.2
        assert r.surface_residual.contains(0)
        assert abs(r.gamma_error) < r.envelope
    env = [float(r.envelope.mid()) for r in rows]
    assert all(y < x for x, y in zip(env, env[1:]))
    errs = [abs(float(r.gamma_error.mid())) for r in rows]
    assert errs[-1] < 1e-6
    dists = [r.curve_distance for r in rows]
    assert dists[-1] < 1e-8


def test_curve_distance_on_curve(heptagon):
    M = m_alpha_floats(heptagon.lat)
    b = np.array([2.0, 0.5])
    v = 0.3 * (b @ M)
    assert curve_distance(v, M, 0.3, heptagon.field, 1) < 1e-12
    assert curve_distance(v, M, 0.3, heptagon.field, -1) > 1e-3


def test_annotation_sign_classes(heptagon):
    approx = enumerate_algebraic(heptagon.lat, ApproxWindow(2, 2000), heptagon.group)
    from normapprox.lattices import norm_spectrum
    mn = norm_spectrum(heptagon.lat.dual().elements, 1).min_norm
    classes = {annotate(heptagon.lat, a, mn).sign_class for a in approx}
    assert classes == {"plus", "minus"}
    for a in approx[:20]:
        ann = annotate(heptagon.lat, a, mn)
        assert ann.norm_level.denominator == 1
