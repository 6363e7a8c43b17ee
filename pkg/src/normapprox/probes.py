"""Numerical probes of two transference inequalities.

The first says that if no q <= Q brings q alpha within delta of Z^d, the
points q alpha (|q| <= Q') cover the torus with radius rho.  The second
turns one good simultaneous approximation into a small value of the
linear form r . alpha.  Both are checked by direct computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

# Q' can be enormous when delta is tiny.  A subset of the orbit that is
# already rho-dense settles the question, so only this many points are
# used; a truncated orbit that misses the bound is reported as undecided.
MAX_ORBIT = 2_000_001


def _dist_to_int(x: np.ndarray) -> np.ndarray:
    return np.abs(x - np.rint(x))


def _is_rational(alpha: Sequence) -> bool:
    return all(isinstance(a, (int, Fraction)) for a in alpha)


def min_distance(alpha: Sequence, Q: int) -> float | Fraction:
    """min over 0 < q <= Q of the sup distance from q alpha to Z^d."""
    if _is_rational(alpha):
        best = None
        for q in range(1, int(Q) + 1):
            v = max(abs(q * Fraction(a) - round(q * Fraction(a))) for a in alpha)
            if best is None or v < best:
                best = v
            if best == 0:
                break
        return best
    a = np.asarray(alpha, dtype=float)
    qs = np.arange(1, int(Q) + 1, dtype=float)
    return float(_dist_to_int(np.outer(qs, a)).max(axis=1).min())


@dataclass
class DispersionResult:
    """holds is None when degenerate or when a truncated orbit missed the bound."""

    delta: float
    Q_prime: int
    rho_bound: float
    rho_empirical: float | None
    degenerate: bool
    holds: bool | None


def covering_radius_1d(points: np.ndarray) -> float:
    """Largest distance from a point of R/Z to the nearest sample."""
    x = np.sort(np.mod(points, 1.0))
    gaps = np.diff(np.concatenate([x, [x[0] + 1.0]]))
    return float(gaps.max() / 2)


def covering_radius_2d(points: np.ndarray, h: float) -> tuple[float, float]:
    """Sup-norm covering radius of the torus by ``points``, measured on a grid of step h.

    Returns (measured max over grid, upper bound = measured + h/2).
    """
    pts = np.mod(points, 1.0)
    pts[pts >= 1.0] = 0.0
    tree = cKDTree(pts, boxsize=1.0)
    n = max(2, int(math.ceil(1 / h)))
    h = 1.0 / n
    g = (np.arange(n) + 0.5) * h
    gx, gy = np.meshgrid(g, g, indexing="ij")
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    dist, _ = tree.query(grid, p=np.inf)
    m = float(dist.max())
    return m, m + h / 2


def dispersion_probe(alpha: Sequence, Q: int) -> DispersionResult:
    """Check that {q alpha + p : |q| <= Q'} is rho-dense."""
    if Q < 1:
        raise ValueError("Q must be at least 1")
    d = len(alpha)
    delta = min_distance(alpha, Q)
    if delta == 0:
        return DispersionResult(0.0, int(Q), math.inf, None, True, None)
    delta = float(delta)
    Qp = int(math.floor(max(Q, 1 / delta**d)))
    rho = max(delta, 1 / (Q * delta ** (d - 1)))
    Qm = min(Qp, (MAX_ORBIT - 1) // 2)
    a = np.array([float(x) for x in alpha])
    qs = np.arange(-Qm, Qm + 1, dtype=float)
    pts = np.outer(qs, a)
    if d == 1:
        emp = covering_radius_1d(pts[:, 0])
        return DispersionResult(delta, Qp, rho, emp, False, _verdict(emp <= rho * (1 + 1e-12), Qm < Qp))
    if d != 2:
        raise ValueError("dispersion probe supports d = 1 or 2")
    h = rho / 16
    emp, upper = covering_radius_2d(pts, h)
    if upper > rho:
        # refine once before reporting
        emp, upper = covering_radius_2d(pts, h / 8)
    return DispersionResult(delta, Qp, rho, emp, False, _verdict(upper <= rho * (1 + 1e-12), Qm < Qp))


def _verdict(ok: bool, truncated: bool) -> bool | None:
    return True if ok else (None if truncated else False)


@dataclass
class LinearFormResult:
    delta: float
    R: float
    rho_bound: float
    attained: float
    witness: tuple
    holds: bool


def linear_form_probe(alpha: Sequence, Q: int) -> LinearFormResult:
    """min over 0 < |r| <= d Q^(1/d) of ||r . alpha|| against d delta / Q^(1 - 1/d)."""
    if Q < 1:
        raise ValueError("Q must be at least 1")
    d = len(alpha)
    delta = float(min_distance(alpha, Q))
    R = d * Q ** (1 / d)
    rho = d * delta / Q ** (1 - 1 / d)
    Ri = int(math.floor(R + 1e-12))
    a = np.array([float(x) for x in alpha])
    best, wit = math.inf, ()
    if d == 1:
        rs = np.arange(1, Ri + 1)
        vals = _dist_to_int(rs * a[0])
        k = int(np.argmin(vals))
        best, wit = float(vals[k]), (int(rs[k]),)
    else:
        rng = np.arange(-Ri, Ri + 1)
        grids = np.meshgrid(*([rng] * d), indexing="ij")
        r = np.stack([g.ravel() for g in grids], axis=1)
        r = r[np.abs(r).max(axis=1) > 0]
        vals = _dist_to_int(r.astype(float) @ a)
        k = int(np.argmin(vals))
        best, wit = float(vals[k]), tuple(int(v) for v in r[k])
    return LinearFormResult(delta, R, rho, best, wit, best <= rho * (1 + 1e-9) + 1e-15)


@dataclass
class MonteCarloSummary:
    d: int
    Q: int
    samples: int
    dispersion_violations: int
    dispersion_skipped: int
    linear_form_violations: int
    worst_dispersion_ratio: float
    worst_linear_ratio: float


def monte_carlo(d: int, Q: int, samples: int, seed: int = 0) -> MonteCarloSummary:
    """Both probes on uniform random alpha in [0, 1)^d."""
    rng = np.random.default_rng(seed)
    dv = ds = lv = 0
    wd = wl = 0.0
    for _ in range(samples):
        alpha = rng.random(d).tolist()
        dr = dispersion_probe(alpha, Q)
        if dr.holds is None:
            ds += 1
        else:
            dv += not dr.holds
            wd = max(wd, dr.rho_empirical / dr.rho_bound)
        lr = linear_form_probe(alpha, Q)
        lv += not lr.holds
        if lr.rho_bound > 0:
            wl = max(wl, lr.attained / lr.rho_bound)
    return MonteCarloSummary(d, Q, samples, dv, ds, lv, wd, wl)
