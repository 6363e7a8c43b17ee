"""Normalized approximations |q|^(1/d) (q alpha - p) and their accumulation sets.

The algebraic route writes every good approximation as x = s u with s in a
finite subset S_C of the dual lattice and u a unit close to the dominant
ray in log space; q and p are then traces.  The oracle route scans q
directly.  Both produce exact integer pairs so the results can be compared
as sets.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import numpy as np
from flint import arb, ctx

from .arith import DEFAULT_PREC, FieldElement, arb_from_fraction, embed, norm, trace
from .errors import NonIntegerTrace, PrecisionExhausted, WrongDimension, ZeroQ
from .lattices import (
    ModuleLattice,
    _cached_minkowski,
    combine,
    enumerate_coords,
    multiplier_ring,
    norm_spectrum,
    unit_action,
)
from .units import UnitGroup, dominant_stream, fundamental_units, sign_pattern

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ApproxWindow:
    """Keep approximations with |q|^eta |q alpha - p|_inf <= C and 1 <= |q| <= q_max."""

    C: Fraction
    q_max: int
    eta: Fraction | None = None

    def __post_init__(self):
        C = Fraction(self.C) if not isinstance(self.C, float) else Fraction(self.C)
        object.__setattr__(self, "C", C)
        if C < 0:
            raise ValueError("C must be nonnegative")
        if self.q_max < 0:
            raise ValueError("q_max must be nonnegative")
        if self.eta is not None:
            object.__setattr__(self, "eta", Fraction(self.eta))


@dataclass
class NormalizedApproximation:
    q: int
    p: tuple
    value: tuple  # midpoints of |q|^eta (q alpha_j - p_j)
    err: float  # largest ball radius among the value entries
    source: str
    s_coords: tuple | None = None
    u_exps: tuple | None = None

    @property
    def key(self) -> tuple:
        return (self.q, self.p)


def sort_key(a: NormalizedApproximation) -> tuple:
    return (abs(a.q), a.q, a.p)


# ---------------------------------------------------------------------------
# Matrices and the gamma/beta decomposition


def _sigma(x: FieldElement, i: int, prec: int):
    return embed(x, i, prec)


def m_alpha(lat: ModuleLattice, prec: int = DEFAULT_PREC) -> list:
    """d x d ball matrix with value = gamma * beta * M.

    Row i (a beta coordinate) is alpha_j - sigma_i(alpha_j) for a real
    embedding i >= 1; each complex embedding contributes the rows
    2 Re(w_j) and -2 Im(w_j) with w_j = alpha_j - sigma(alpha_j).
    """
    f = lat.field
    alphas = lat.alpha
    rows = []
    with ctx.workprec(prec + 16):
        a0 = [_sigma(a, 0, prec) for a in alphas]
        for i in range(1, f.r_plus_1):
            rows.append([a0[j] - _sigma(a, i, prec) for j, a in enumerate(alphas)])
        for k in range(f.s):
            ws = [a0[j] - _sigma(a, f.r_plus_1 + k, prec) for j, a in enumerate(alphas)]
            rows.append([2 * w.real for w in ws])
            rows.append([-2 * w.imag for w in ws])
    return rows


def m_alpha_floats(lat: ModuleLattice) -> np.ndarray:
    return np.array([[float(v.mid()) for v in row] for row in m_alpha(lat, 80)])


def _det_balls(m: list):
    if len(m) == 1:
        return m[0][0]
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def recover_qp(s: FieldElement, u: FieldElement, lat: ModuleLattice) -> tuple[int, tuple]:
    """q = Tr(su), p_i = Tr(su alpha_i)."""
    x = s * u
    vals = [trace(x * b) for b in lat.basis]
    if any(v.denominator != 1 for v in vals):
        raise NonIntegerTrace("s is not in the dual lattice")
    return int(vals[0]), tuple(int(v) for v in vals[1:])


def dual_element(lat: ModuleLattice, q: int, p: Sequence[int]) -> FieldElement:
    """alpha* = q alpha_0* + sum p_i alpha_i*."""
    return combine(lat.dual().elements, [q, *p])


@dataclass
class GammaBeta:
    q: int
    p: tuple
    gamma: arb
    beta: list
    value: list


def gamma_beta(s: FieldElement, u: FieldElement, lat: ModuleLattice,
               prec: int = DEFAULT_PREC) -> GammaBeta:
    """gamma = |q|^(1/d) |sigma_1(su)...sigma_d(su)|^(1/d) and the surface point beta."""
    f = lat.field
    d = lat.d
    x = s * u
    q, p = recover_qp(s, u, lat)
    if q == 0:
        raise ZeroQ("Tr(su) = 0")
    with ctx.workprec(prec + 32):
        conj = [embed(x, i, prec) for i in range(1, f.embedding_count)]
        prod = arb(1)
        coords = []
        for i, c in enumerate(conj):
            if i + 1 < f.r_plus_1:
                prod *= abs(c)
                coords.append(c)
            else:
                prod *= abs(c) ** 2
                coords += [c.real, c.imag]
        qa = arb(abs(q))
        gamma = (qa * prod).root(d)
        scale = qa.root(d) / gamma
        beta = [scale * c for c in coords]
        value = [qa.root(d) * (q * embed(a, 0, prec) - pj) for a, pj in zip(lat.alpha, p)]
    return GammaBeta(q, p, gamma, beta, value)


def surface_residual(beta: list, field) -> arb:
    """|x_1...x_r| prod (x^2 + y^2) - 1 for beta coordinates."""
    r = field.r_plus_1 - 1
    val = arb(1)
    for i in range(r):
        val *= abs(beta[i])
    for k in range(field.s):
        a, b = beta[r + 2 * k], beta[r + 2 * k + 1]
        val *= a * a + b * b
    return val - 1


# ---------------------------------------------------------------------------
# Algebraic enumeration


def _sup_dist_to_segment(v: np.ndarray, direction: np.ndarray, tmax: float) -> float:
    """min over 0 <= t <= tmax of |v - t direction|_inf (convex, piecewise linear)."""
    cands = [0.0, tmax]
    m = len(v)
    for i in range(m):
        if direction[i]:
            cands.append(v[i] / direction[i])
        for k in range(i + 1, m):
            for sgn in (1, -1):
                den = direction[i] - sgn * direction[k]
                if den:
                    cands.append((v[i] - sgn * v[k]) / den)
    best = math.inf
    for t in cands:
        t = min(max(t, 0.0), tmax)
        best = min(best, float(np.abs(v - t * direction).max()))
    return best


def tube_units(group: UnitGroup, tau_max: float, radius: float | None = None) -> list:
    """Exponent vectors of units within sup-distance radius of the dominant segment."""
    field = group.field
    d = field.degree - 1
    radius = group.covering_radius() * (1 + 1e-9) + 1e-12 if radius is None else radius
    direction = np.array([1.0] + [-1.0 / d] * (field.embedding_count - 1))
    P = group.pinv()
    ends = [P @ (0 * direction), P @ (tau_max * direction)]
    slack = [np.abs(row).sum() * radius for row in P]
    ranges = []
    for k in range(group.rank):
        lo = min(e[k] for e in ends) - slack[k]
        hi = max(e[k] for e in ends) + slack[k]
        ranges.append(range(int(math.floor(lo)) - 1, int(math.ceil(hi)) + 2))
    out = []
    import itertools
    for a in itertools.product(*ranges):
        if _sup_dist_to_segment(group.log_of(a), direction, tau_max) <= radius:
            out.append(tuple(a))
    out.sort(key=lambda a: (float(group.log_of(a)[0]), a))
    return out


def sc_radii(lat: ModuleLattice, group: UnitGroup, C, prec: int = DEFAULT_PREC) -> list:
    """Per-embedding bounds on |sigma_j(s)| for the finite set S_C.

    With x = q alpha_0* + sum p_i alpha_i* and C_j = C sum_{i>=1} |sigma_j(alpha_i*)|,
    a good approximation gives |x - q| <= C_0 q^(-1/d) and |sigma_j(x)| <= C_j q^(-1/d);
    dividing by a unit within the covering radius rho of the target for t = q yields
    |s| <= e^rho (1 + C_0) and |sigma_j(s)| <= e^rho C_j.
    """
    f = lat.field
    dual = lat.dual().elements
    C = Fraction(C)
    with ctx.workprec(prec):
        cj = []
        for j in range(f.embedding_count):
            tot = arb(0)
            for a in dual[1:]:
                tot += abs(embed(a, j, prec))
            cj.append(float((tot * arb_from_fraction(C)).upper()))
    e = math.exp(group.covering_radius()) * (1 + 1e-9)
    radii = [e * (1 + cj[0])] + [e * c for c in cj[1:]]
    return [Fraction(max(r, 1e-300)) for r in radii]


def _certified_le(q: int, p: tuple, lat: ModuleLattice, C: Fraction, eta: Fraction,
                  prec: int = DEFAULT_PREC) -> bool:
    """Exact decision of |q|^eta |q alpha_j - p_j| <= C for all j, by ball refinement."""
    f = lat.field
    w = prec
    while w <= f.max_prec:
        with ctx.workprec(w + 32):
            cb = arb_from_fraction(C)
            qa = arb(abs(q))
            decided = True
            for a, pj in zip(lat.alpha, p):
                diff = abs(q * embed(a, 0, w + int(abs(q)).bit_length()) - pj)
                if eta.denominator == 1:
                    lhs = qa ** int(eta) * diff
                    ok_hi, ok_lo = lhs <= cb, lhs > cb
                else:
                    # compare |q|^num * diff^den with C^den to stay algebraic
                    lhs = qa ** eta.numerator * diff ** eta.denominator
                    rhs = cb ** eta.denominator
                    ok_hi, ok_lo = lhs <= rhs, lhs > rhs
                if ok_lo:
                    return False
                if not ok_hi:
                    decided = False
            if decided:
                return True
        w *= 2
    raise PrecisionExhausted(f"window test unresolved at q = {q}", q=q)


def _value_balls(q: int, p: tuple, lat: ModuleLattice, eta: Fraction, prec: int = DEFAULT_PREC):
    with ctx.workprec(prec + 32):
        qa = arb(abs(q))
        scale = qa ** arb_from_fraction(eta) if q else arb(0)
        vals = [scale * (q * embed(a, 0, prec + int(abs(q)).bit_length()) - pj)
                for a, pj in zip(lat.alpha, p)]
    mids = tuple(float(v.mid()) for v in vals)
    err = max(float(v.rad()) for v in vals)
    return mids, err


@dataclass
class AlgebraicResult:
    approximations: list
    zero_q: int
    sc_size: int
    unit_count: int
    radii: list = dc_field(default_factory=list)


def enumerate_algebraic(lat: ModuleLattice, window: ApproxWindow, group: UnitGroup | None = None,
                        prec: int = DEFAULT_PREC, details: bool = False):
    """All (q, p) with 1 <= |q| <= q_max and |q|^(1/d) |q alpha - p|_inf <= C, as s u."""
    f = lat.field
    d = lat.d
    if window.eta is not None and window.eta != Fraction(1, d):
        raise ValueError("algebraic enumeration only supports eta = 1/d")
    eta = Fraction(1, d)
    C = window.C
    if window.q_max < 1 or C == 0:
        res = AlgebraicResult([], 0, 0, 0)
        return res if details else res.approximations
    if group is None:
        group = fundamental_units(multiplier_ring(lat))
    radii = sc_radii(lat, group, C, prec)
    dual = lat.dual().elements
    S = enumerate_coords(dual, radii, prec)
    S = [c for c in S if any(c)]
    units = tube_units(group, math.log(window.q_max))
    logger.info("S_C has %d points, %d tube units", len(S), len(units))
    if not S:
        res = AlgebraicResult([], 0, 0, len(units), radii)
        return res if details else res.approximations

    Sarr = np.array(S, dtype=np.int64)
    # Minkowski coordinates of the s points: real conjugates, then complex pairs
    E = _cached_minkowski(tuple(dual))
    svals = Sarr.astype(float) @ E.T
    r1 = f.r_plus_1
    s_real = svals[:, 1:r1]
    s_cplx = [svals[:, r1 + 2 * k] + 1j * svals[:, r1 + 2 * k + 1] for k in range(f.s)]
    M = m_alpha_floats(lat)
    Cf = float(C)
    smax = int(np.abs(Sarr).max())

    seen: dict = {}
    zero_q = 0
    for exps in units:
        u = group.unit(exps)
        Mu = unit_action(u, lat)
        big = max(abs(v) for row in Mu for v in row) * smax * len(Mu)
        if big < 2**62:
            qp = Sarr @ np.array(Mu, dtype=np.int64).T
        else:
            qp = np.array((Sarr.astype(object) @ np.array(Mu, dtype=object).T).tolist(), dtype=object)
        q = qp[:, 0]
        zero_q += int(np.count_nonzero(q == 0))
        keep = (q != 0) & (np.abs(q) <= window.q_max)
        if not keep.any():
            continue
        idx = np.nonzero(keep)[0]
        uc = [embed(u, i, 64) for i in range(f.embedding_count)]
        y = []
        for i in range(1, r1):
            y.append(s_real[idx, i - 1] * float(uc[i].mid()))
        for k in range(f.s):
            z = s_cplx[k][idx] * complex(float(uc[r1 + k].real.mid()), float(uc[r1 + k].imag.mid()))
            y += [z.real, z.imag]
        Y = np.stack(y, axis=1)
        qf = np.abs(q[idx].astype(float))
        vals = (qf ** (1.0 / d))[:, None] * (Y @ M)
        mag = np.abs(vals).max(axis=1)
        sure_in = mag <= Cf * (1 - 1e-9)
        sure_out = mag > Cf * (1 + 1e-9)
        for k_local in np.nonzero(~sure_out)[0]:
            row = idx[k_local]
            qq = int(qp[row, 0])
            pp = tuple(int(v) for v in qp[row, 1:])
            if (qq, pp) in seen:
                continue
            if not sure_in[k_local] and not _certified_le(qq, pp, lat, C, eta, prec):
                continue
            seen[(qq, pp)] = (S[row], exps)
    out = []
    for (qq, pp), (sc, exps) in seen.items():
        mids, err = _value_balls(qq, pp, lat, eta, prec)
        out.append(NormalizedApproximation(qq, pp, mids, err, "algebraic", sc, exps))
    out.sort(key=sort_key)
    if zero_q:
        logger.info("skipped %d pairs with q = 0", zero_q)
    res = AlgebraicResult(out, zero_q, len(S), len(units), radii)
    return res if details else out


# ---------------------------------------------------------------------------
# Brute-force oracle


def oracle_scan(lat: ModuleLattice, window: ApproxWindow, prec: int = DEFAULT_PREC) -> list:
    """Direct scan over 1 <= q <= q_max, emitting (q, p) and (-q, -p)."""
    d = lat.d
    eta = window.eta if window.eta is not None else Fraction(1, d)
    C = window.C
    if window.q_max < 1:
        return []
    alphas = [float(embed(a, 0, 80).mid()) for a in lat.alpha]
    qs = np.arange(1, window.q_max + 1, dtype=np.int64)
    qf = qs.astype(float)
    h = float(C) / qf ** float(eta)
    K = int(math.ceil(float(C))) + 1
    per_coord = []
    for a in alphas:
        qa = qf * a
        base = np.floor(qa).astype(np.int64)
        margin = 1e-8 * h + 1e-14 * qf * (abs(a) + 1) + 1e-300
        cands = []
        for k in range(-K, K + 2):
            p = base + k
            dist = np.abs(qa - p)
            maybe = dist <= h + margin
            if maybe.any():
                cands.append((p, maybe, dist >= h - margin))
        per_coord.append(cands)
    hits = []
    if d == 1:
        for p, maybe, border in per_coord[0]:
            idx = np.nonzero(maybe)[0]
            hits.extend((int(qs[i]), (int(p[i]),), bool(border[i])) for i in idx)
    else:
        for p1, m1, b1 in per_coord[0]:
            for p2, m2, b2 in per_coord[1]:
                both = m1 & m2
                if not both.any():
                    continue
                idx = np.nonzero(both)[0]
                hits.extend((int(qs[i]), (int(p1[i]), int(p2[i])), bool(b1[i] or b2[i]))
                            for i in idx)
    out = []
    for q, p, border in hits:
        if border and not _certified_le(q, p, lat, C, eta, prec):
            continue
        mids, err = _value_balls(q, p, lat, eta, prec)
        out.append(NormalizedApproximation(q, p, mids, err, "oracle"))
        out.append(NormalizedApproximation(-q, tuple(-v for v in p), tuple(-v for v in mids), err,
                                           "oracle"))
    out.sort(key=sort_key)
    return out


def pair_set(approxs: Sequence[NormalizedApproximation]) -> set:
    return {a.key for a in approxs}


# ---------------------------------------------------------------------------
# Annotation: gamma, norm level and sign class depend only on x = su


@dataclass
class Annotation:
    gamma: float
    norm_level: Fraction
    sign_class: str


def annotate(lat: ModuleLattice, a: NormalizedApproximation, min_norm: Fraction) -> Annotation:
    f = lat.field
    d = lat.d
    x = dual_element(lat, a.q, a.p)
    n = abs(norm(x))
    with ctx.workprec(96):
        g = (arb(abs(a.q)) * arb_from_fraction(n) / abs(embed(x, 0, 80))).root(d)
    sc = "n/a"
    if f.is_totally_real and d == 2:
        sig = sign_pattern(x)
        sc = "plus" if sig[1] * sig[2] > 0 else "minus"
    return Annotation(float(g.mid()), n / min_norm, sc)


# ---------------------------------------------------------------------------
# Accumulation sets


def _squarefree_split(n: int) -> tuple[int, int]:
    """n = m^2 * D with D squarefree; returns (m, D)."""
    m, D = 1, 1
    k = 2
    rest = n
    while k * k <= rest:
        while rest % (k * k) == 0:
            rest //= k * k
            m *= k
        if rest % k == 0:
            rest //= k
            D *= k
        k += 1
    return m, D * rest


@dataclass
class AccumulationPoint:
    level: Fraction
    coeff: Fraction  # value = +-coeff * sqrt(D)
    D: int
    value: float
    witness: tuple

    def symbolic(self) -> str:
        return f"+-{self.coeff}*sqrt({self.D})"


def accumulation_set_quadratic(lat: ModuleLattice, level_max: int, cap: int = 30) -> list:
    """Points +-(alpha - alpha') |N(s)| for the attained norm levels up to level_max."""
    if lat.d != 1:
        raise WrongDimension("quadratic accumulation set needs d = 1")
    a = lat.alpha[0]
    disc = trace(a) ** 2 - 4 * norm(a)  # (alpha - alpha')^2
    m, D = _squarefree_split(disc.numerator * disc.denominator)
    root_coeff = Fraction(m, disc.denominator)  # alpha - alpha' = root_coeff sqrt(D), up to sign
    spec = norm_spectrum(lat.dual().elements, level_max, cap)
    out = []
    for level, wits in spec.levels.items():
        if level > level_max:
            continue
        c = root_coeff * spec.min_norm * level
        out.append(AccumulationPoint(level, c, D, float(c) * math.sqrt(D), wits[0]))
    return out


def cluster_values(values: Sequence[float], gap: float) -> list:
    """Split sorted values wherever consecutive entries differ by more than gap."""
    vs = sorted(values)
    if not vs:
        return []
    clusters = [[vs[0]]]
    for v in vs[1:]:
        if v - clusters[-1][-1] > gap:
            clusters.append([v])
        else:
            clusters[-1].append(v)
    return clusters


@dataclass
class Dilation:
    level: Fraction
    scale: float  # |N(s)|^(1/d)
    sign_classes: tuple
    witnesses: dict  # sign class -> witness coordinates in the dual basis


@dataclass
class CurveFamily:
    kind: str  # "ellipse" or "hyperbola-pair"
    m_alpha: np.ndarray
    dilations: list
    missing: list
    certificates: dict
    min_norm: Fraction


def witness_sign_class(lat: ModuleLattice, coords: Sequence[int]) -> str:
    s = combine(lat.dual().elements, coords)
    sig = sign_pattern(s)
    return "plus" if sig[1] * sig[2] > 0 else "minus"


def accumulation_curves_cubic(lat: ModuleLattice, level_max: int, cap: int = 8) -> CurveFamily:
    f = lat.field
    if lat.d != 2:
        raise WrongDimension("cubic accumulation curves need d = 2")
    spec = norm_spectrum(lat.dual().elements, level_max, cap)
    kind = "hyperbola-pair" if f.is_totally_real else "ellipse"
    dil = []
    for level, wits in spec.levels.items():
        if level > level_max:
            continue
        scale = math.sqrt(float(spec.min_norm * level))
        if kind == "ellipse":
            dil.append(Dilation(level, scale, ("n/a",), {"n/a": wits[0]}))
            continue
        by_class: dict = {}
        for c in wits:
            cls = witness_sign_class(lat, c)
            by_class.setdefault(cls, c)
            if len(by_class) == 2:
                break
        dil.append(Dilation(level, scale, tuple(sorted(by_class)), by_class))
    return CurveFamily(kind, m_alpha_floats(lat), dil, spec.missing, spec.certificates,
                       spec.min_norm)


def reflect(beta: Sequence[float]) -> tuple:
    """The fixed involution (x1, x2) -> (x1, -x2) swapping x1 x2 = 1 and x1 x2 = -1."""
    return (beta[0], -beta[1])


# ---------------------------------------------------------------------------
# Distances to curves


def _curve_points(field, d: int, sign: int = 1, n: int = 4096) -> np.ndarray:
    """Dense samples of the surface in beta coordinates."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if field.s == 1:
        th = np.linspace(0, 2 * math.pi, n, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    t = np.linspace(-12, 12, n)
    pts = []
    for sx in (1, -1):
        pts.append(np.stack([sx * np.exp(t), sign * sx * np.exp(-t)], axis=1))
    return np.vstack(pts)


def _closest_on_arc(P, dP, v, lo: float, hi: float) -> float:
    """Distance from v to the arc P([lo, hi]) via the orthogonality condition."""
    from scipy.optimize import brentq

    def g(t):
        return float(np.dot(P(t) - v, dP(t)))

    cands = [lo, hi]
    glo, ghi = g(lo), g(hi)
    if glo < 0 < ghi:
        cands.append(brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200))
    return min(float(np.linalg.norm(P(t) - v)) for t in cands)


def curve_distance(value: Sequence[float], M: np.ndarray, scale: float, field, sign: int = 1) -> float:
    """Euclidean distance from a value vector to scale * {b M : b on the surface}."""
    v = np.asarray(value, dtype=float)
    d = len(v)
    if d == 1:
        return float(min(abs(v[0] - scale * M[0, 0]), abs(v[0] + scale * M[0, 0])))
    pts = scale * (_curve_points(field, d, sign) @ M)
    k = int(np.argmin(np.linalg.norm(pts - v, axis=1)))
    if field.s == 1:
        n = len(pts)
        th0 = 2 * math.pi * k / n
        step = 2 * math.pi / n
        P = lambda th: scale * (np.array([math.cos(th), math.sin(th)]) @ M)
        dP = lambda th: scale * (np.array([-math.sin(th), math.cos(th)]) @ M)
        return min(_closest_on_arc(P, dP, v, th0 - step, th0),
                   _closest_on_arc(P, dP, v, th0, th0 + step))
    half = len(pts) // 2
    sx = 1 if k < half else -1
    t = np.linspace(-12, 12, half)
    t0 = t[k % half]
    step = t[1] - t[0]
    P = lambda tt: scale * (np.array([sx * math.exp(tt), sign * sx * math.exp(-tt)]) @ M)
    dP = lambda tt: scale * (np.array([sx * math.exp(tt), -sign * sx * math.exp(-tt)]) @ M)
    return min(_closest_on_arc(P, dP, v, t0 - step, t0), _closest_on_arc(P, dP, v, t0, t0 + step))


@dataclass
class ConvergenceRow:
    exps: tuple
    log_u: float
    q: int
    p: tuple
    gamma: arb
    gamma_error: arb
    beta: list
    surface_residual: arb
    curve_distance: float
    envelope: arb  # certified bound on |gamma_error|


def _gamma_envelope(s: FieldElement, u: FieldElement, nu: arb, prec: int) -> arb:
    """nu * sum_{j >= 1} |sigma_j(su)| / |sigma_0(su)|, counting complex pairs twice.

    gamma^d = |N(s)| Tr(su) / sigma_0(su) and Tr(su) / sigma_0(su) - 1 is at most this
    ratio, so |gamma - nu| <= nu * ratio whenever the ratio is below 1.
    """
    f = s.field
    with ctx.workprec(prec + 32):
        top = arb(0)
        for j in range(1, f.embedding_count):
            w = 1 if j < f.r_plus_1 else 2
            top += w * abs(embed(s, j, prec)) * abs(embed(u, j, prec))
        ratio = top / abs(embed(s, 0, prec) * embed(u, 0, prec))
        return nu * ratio


def convergence_report(s: FieldElement, lat: ModuleLattice, group: UnitGroup, count: int,
                       t0: float = 1.0, prec: int = DEFAULT_PREC) -> tuple[list, int]:
    """Rows along the dominant stream; returns (rows, number of q = 0 rows skipped)."""
    if s.is_zero():
        raise ValueError("s must be nonzero")
    f = lat.field
    d = lat.d
    M = m_alpha_floats(lat)
    n = abs(norm(s))
    rows = []
    skipped = 0
    stream = dominant_stream(group, t0, count * 3 + 10)
    for du in stream:
        if len(rows) >= count:
            break
        try:
            gb = gamma_beta(s, du.unit, lat, prec)
        except ZeroQ:
            skipped += 1
            continue
        w = prec
        while True:
            with ctx.workprec(w + 32):
                gb = gamma_beta(s, du.unit, lat, w)
                err = gb.gamma - arb_from_fraction(n).root(d)
            if not err.contains(0):
                break
            w *= 2
            if w > f.max_prec:
                raise PrecisionExhausted("gamma error not separated from zero")
        sign = 1
        if f.is_totally_real and d == 2:
            sign = 1 if float((gb.beta[0] * gb.beta[1]).mid()) > 0 else -1
        scale = float(arb_from_fraction(n).root(d).mid())
        vals = [float(v.mid()) for v in gb.value]
        dist = curve_distance(vals, M, scale, f, sign)
        env = _gamma_envelope(s, du.unit, arb_from_fraction(n).root(d), prec)
        rows.append(ConvergenceRow(du.exps, float(du.log[0]), gb.q, gb.p, gb.gamma, err, gb.beta,
                                   surface_residual(gb.beta, f), dist, env))
    return rows, skipped
