import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from normapprox.probes import (
    covering_radius_1d,
    covering_radius_2d,
    dispersion_probe,
    linear_form_probe,
    min_distance,
    monte_carlo,
)

PHI = (1 + 5 ** 0.5) / 2


def test_min_distance_golden():
    # the best q <= 100 is the Fibonacci number 89
    d = min_distance([PHI], 100)
    assert abs(d - abs(89 * PHI - round(89 * PHI))) < 1e-12


def test_dispersion_golden():
    r = dispersion_probe([PHI], 100)
    assert r.holds
    assert r.rho_empirical <= r.rho_bound
    assert r.Q_prime == math.floor(1 / r.delta)


def test_dispersion_rational_degenerate():
    r = dispersion_probe([Fraction(3, 7)], 10)
    assert r.degenerate and r.delta == 0 and r.holds is None
    r = dispersion_probe([Fraction(3, 7)], 6)
    assert not r.degenerate and r.holds


def test_linear_form_collapses_in_dimension_one():
    r = linear_form_probe([PHI], 50)
    assert r.R == 50 and r.rho_bound == r.delta
    assert r.holds


def test_linear_form_cube_root_two():
    a = 2 ** (1 / 3)
    r = linear_form_probe([a, a * a], 10 ** 4)
    assert r.R == 200
    assert r.holds and r.attained <= r.rho_bound


def test_covering_radius_helpers():
    assert covering_radius_1d(np.array([0.0, 0.5])) == 0.25
    pts = np.array([[i / 4, j / 4] for i in range(4) for j in range(4)])
    m, up = covering_radius_2d(pts, 1 / 64)
    assert m <= 0.125 <= up + 1e-12


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.001, 0.999), Q=st.integers(1, 300))
def test_probes_one_dimensional(a, Q):
    r = dispersion_probe([a], Q)
    assert r.holds in (True, None)
    assert linear_form_probe([a], Q).holds


@settings(max_examples=10, deadline=None)
@given(a=st.floats(0.001, 0.999), b=st.floats(0.001, 0.999), Q=st.integers(1, 200))
def test_probes_two_dimensional(a, b, Q):
    r = dispersion_probe([a, b], Q)
    assert r.holds in (True, None)
    assert linear_form_probe([a, b], Q).holds


def test_monte_carlo_is_seeded():
    a = monte_carlo(1, 200, 10, seed=3)
    b = monte_carlo(1, 200, 10, seed=3)
    assert a == b
    assert a.dispersion_violations == 0 and a.linear_form_violations == 0


def test_probe_rejects_bad_q():
    with pytest.raises(ValueError):
        dispersion_probe([0.3], 0)
    with pytest.raises(ValueError):
        linear_form_probe([0.3], 0)
