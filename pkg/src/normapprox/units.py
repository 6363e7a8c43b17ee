"""Units of multiplier rings: logarithmic embedding, fundamental systems,
the covering constant kappa and dominant units."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import numpy as np
from flint import arb, ctx

from .arith import DEFAULT_PREC, FieldElement, NumberField, embed, norm
from .contfrac import cf_terms, convergents
from .errors import PrecisionExhausted, SearchExhausted
from .lattices import (
    ModuleLattice,
    MultiplierRingBasis,
    _cached_minkowski,
    _eval_form_grid,
    combine,
    enumerate_coords,
    integer_norm_form,
)

logger = logging.getLogger(__name__)

DEFAULT_CERT_CAP = 20


@dataclass(frozen=True)
class LogVector:
    """(log|sigma_0(x)|, ..., log|sigma_{r+s}(x)|) as balls."""

    values: tuple

    def floats(self) -> np.ndarray:
        return np.array([float(v.mid()) for v in self.values])

    def weighted_sum(self, field: NumberField) -> arb:
        return sum((v * w for v, w in zip(self.values, hyperplane_weights(field))), arb(0))


def hyperplane_weights(field: NumberField) -> list:
    """Units satisfy sum w_i log|sigma_i(u)| = 0 with these weights."""
    return [1] * field.r_plus_1 + [2] * field.s


def log_embedding(x: FieldElement, prec: int = DEFAULT_PREC) -> LogVector:
    if x.is_zero():
        raise ValueError("log embedding of zero")
    vals = []
    for i in range(x.field.embedding_count):
        w = prec
        while True:
            if w > x.field.max_prec:
                raise PrecisionExhausted(f"log|sigma_{i}| of {x} not resolved")
            with ctx.workprec(w + 16):
                m = abs(embed(x, i, w))
                if m > 0:
                    vals.append(m.log())
                    break
            w *= 2
    return LogVector(tuple(vals))


def _log_floats(field: NumberField, basis: tuple, coords: np.ndarray) -> np.ndarray:
    """Float log vectors of ring elements given by integer coordinates (rows)."""
    E = _cached_minkowski(basis)
    vals = coords.astype(float) @ E.T
    out = []
    col = 0
    for i in range(field.embedding_count):
        if i < field.r_plus_1:
            out.append(np.log(np.abs(vals[:, col])))
            col += 1
        else:
            out.append(np.log(np.hypot(vals[:, col], vals[:, col + 1])))
            col += 2
    return np.stack(out, axis=1)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KappaBound:
    kappa: float
    rho_hat: float

    @property
    def log_kappa(self) -> float:
        return 2 * self.rho_hat


@dataclass
class UnitGroup:
    ring: MultiplierRingBasis
    units: tuple
    logs: np.ndarray  # rank x (r+s+1)
    regulator: arb
    method: str
    certified: bool
    search_radius: float = 0.0
    cert_cap: int = DEFAULT_CERT_CAP
    _powers: dict = dc_field(default_factory=dict, repr=False)
    _cov: float | None = dc_field(default=None, repr=False)

    @property
    def field(self) -> NumberField:
        return self.ring.field

    @property
    def rank(self) -> int:
        return len(self.units)

    @property
    def rho_hat(self) -> float:
        """Upper bound for the sup-norm covering radius of the log lattice."""
        return 0.5 * float(sum(np.abs(v).max() for v in self.logs))

    def kappa(self) -> KappaBound:
        return kappa(self)

    def covering_radius(self) -> float:
        """Upper bound for the sup-norm distance from the unit hyperplane to the log lattice.

        Never larger than rho_hat; used to size searches.
        """
        if self._cov is None:
            self._cov = covering_radius(self.logs)
        return self._cov

    def power(self, k: int, e: int) -> FieldElement:
        key = (k, e)
        if key not in self._powers:
            self._powers[key] = self.units[k] ** e
        return self._powers[key]

    def unit(self, exps: Sequence[int], sign: int = 1) -> FieldElement:
        x = self.field.one
        for k, e in enumerate(exps):
            if e:
                x = x * self.power(k, e)
        return x if sign > 0 else -x

    def log_of(self, exps: Sequence[int]) -> np.ndarray:
        return np.asarray(exps, dtype=float) @ self.logs

    def pinv(self) -> np.ndarray:
        return np.linalg.pinv(self.logs.T)


def _unit_norm_ok(x: FieldElement) -> bool:
    return abs(norm(x)) == 1


def _hyperplane_cells(m: int, weights: list, T: float, h: float):
    """Boxes in log space covering {v on the unit hyperplane : |v|_inf <= T}.

    Coordinates 1..m-1 run over a grid of step h; coordinate 0 is solved
    from the hyperplane equation.  Yields (cell key, per-embedding upper
    bounds on log|sigma_i|).
    """
    n_steps = int(math.ceil(T / h))
    rng = range(-n_steps, n_steps)
    for key in itertools.product(rng, repeat=m - 1):
        lo = [k * h for k in key]
        hi = [a + h for a in lo]
        v0_max = -sum(w * a for w, a in zip(weights[1:], lo))
        v0_min = -sum(w * b for w, b in zip(weights[1:], hi))
        if v0_min > T or v0_max < -T:
            continue
        yield key, [v0_max] + hi


def _collect_units(ring: MultiplierRingBasis, T: float, h: float, seen_cells: set,
                   found: dict) -> None:
    field = ring.field
    basis = tuple(ring.elements)
    weights = hyperplane_weights(field)
    m = field.embedding_count
    slack = 1e-9
    for key, ups in _hyperplane_cells(m, weights, T, h):
        if key in seen_cells:
            continue
        seen_cells.add(key)
        radii = [Fraction(math.exp(u + slack)) for u in ups]
        for c in enumerate_coords(basis, radii):
            if not any(c) or c in found:
                continue
            x = combine(basis, c)
            if x.is_rational():
                continue  # only the torsion units +-1
            if _unit_norm_ok(x):
                found[c] = x


def _positive_rep(x: FieldElement, lv: np.ndarray):
    """Normalize a unit to sigma_0 > 0 and log|sigma_0| > 0 (or its inverse)."""
    if lv[0] < 0:
        x, lv = x.inverse(), -lv
    if embed(x, 0, 64) < 0:
        x = -x
    return x, lv


def _successive_minima(vectors: list, rank: int) -> list:
    """Indices of a shortest vector and, for rank 2, the shortest independent one."""
    order = sorted(range(len(vectors)), key=lambda i: (float(np.linalg.norm(vectors[i][1])),
                                                       vectors[i][2]))
    if not order:
        return []
    chosen = [order[0]]
    if rank == 2:
        v1 = vectors[order[0]][1]
        for i in order[1:]:
            v = vectors[i][1]
            g = np.array([[v1 @ v1, v1 @ v], [v @ v1, v @ v]])
            if np.linalg.det(g) > 1e-9 * (v1 @ v1) * (v @ v):
                chosen.append(i)
                break
    return chosen


def _lagrange_reduce(u1, v1, u2, v2):
    """Gauss-Lagrange reduction of a rank-2 log lattice basis, tracking units."""
    while True:
        if v2 @ v2 < v1 @ v1:
            u1, v1, u2, v2 = u2, v2, u1, v1
        k = int(round(float(v1 @ v2) / float(v1 @ v1)))
        if k == 0:
            return u1, v1, u2, v2
        u2 = u2 * u1 ** (-k)
        v2 = v2 - k * v1


def _regulator(field: NumberField, units: Sequence[FieldElement], prec: int = DEFAULT_PREC) -> arb:
    if not units:
        return arb(1)
    w = hyperplane_weights(field)
    with ctx.workprec(prec):
        rows = []
        for u in units:
            lv = log_embedding(u, prec).values
            rows.append([lv[i] * w[i] for i in range(len(units))])
        if len(rows) == 1:
            return abs(rows[0][0])
        det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
        return abs(det)


def _quadratic_candidate(ring: MultiplierRingBasis):
    """First convergent p/q of sigma_0(w) with p - q w a unit, w the second ring basis element."""
    w = ring.elements[1]
    count = 64
    while True:
        prec = min(ring.field.max_prec, 16 * count)
        terms = cf_terms(lambda p: embed(w, 0, min(p, ring.field.max_prec)), count, prec=prec,
                         max_prec=ring.field.max_prec)
        for p, q in convergents(terms):
            x = w.field(p) - q * w
            if not x.is_zero() and _unit_norm_ok(x):
                return x
        if 16 * count >= ring.field.max_prec:
            raise SearchExhausted("no unit among the continued fraction convergents")
        count *= 4


def fundamental_units(ring: MultiplierRingBasis, max_radius: float = 64.0,
                      cert_cap: int = DEFAULT_CERT_CAP) -> UnitGroup:
    """A fundamental system of units of the multiplier ring.

    Units are found by covering the unit hyperplane in log space with small
    boxes and enumerating ring elements in each.  Once every unit with log
    sup-norm at most T is known, a shortest vector (and for rank 2 the
    shortest independent one) is a basis as soon as its Euclidean length is
    at most T, so the result is certified.  Real quadratic rings get their
    candidate from the continued fraction of the second basis element first.
    """
    field = ring.field
    rank = field.r_plus_1 + field.s - 1
    found: dict = {}
    seen: set = set()
    h = 1.0
    method = "log-cover"
    T = 1.0
    if field.degree == 2:
        method = "continued-fraction"
        cand = _quadratic_candidate(ring)
        lv = log_embedding(cand, 64).floats()
        T = max(1.0, abs(float(lv[0])) * (1 + 1e-9))
        found[tuple(int(c) for c in ring.coords(cand))] = cand
    while True:
        _collect_units(ring, T, h, seen, found)
        coords = np.array(list(found.keys()), dtype=np.int64).reshape(-1, field.degree)
        vectors = []
        if len(coords):
            logs = _log_floats(field, tuple(ring.elements), coords)
            for c, lv in zip(found.keys(), logs):
                if np.abs(lv).max() <= T:
                    vectors.append((found[c], lv, c))
        idx = _successive_minima(vectors, rank)
        if len(idx) == rank and float(np.linalg.norm(vectors[idx[-1]][1])) <= T:
            break
        if rank == 1 and idx and float(np.abs(vectors[idx[0]][1]).max()) <= T:
            break
        if T >= max_radius:
            raise SearchExhausted(f"no full unit system with log sup-norm <= {max_radius}")
        T = min(2 * T, max_radius)
    gens = [_positive_rep(vectors[i][0], vectors[i][1].copy()) for i in idx]
    if rank == 2:
        u1, v1, u2, v2 = _lagrange_reduce(gens[0][0], gens[0][1], gens[1][0], gens[1][1])
        gens = [_positive_rep(u1, v1), _positive_rep(u2, v2)]
        gens.sort(key=lambda g: (float(np.abs(g[1]).max()), tuple(g[1])))
    units = tuple(g[0] for g in gens)
    logs = np.array([log_embedding(u, 64).floats() for u in units])
    reg = _regulator(field, units)
    logger.info("unit group of rank %d found with search radius %.3g", rank, T)
    return UnitGroup(ring, units, logs, reg, method, True, T, cert_cap)


def assume_units(ring: MultiplierRingBasis, units: Sequence[FieldElement],
                 lattice: ModuleLattice | None = None) -> UnitGroup:
    """Trust user supplied fundamental units after checking they are units of the ring."""
    field = ring.field
    rank = field.r_plus_1 + field.s - 1
    if len(units) != rank:
        raise ValueError(f"expected {rank} units, got {len(units)}")
    lat = lattice or ring.lattice
    gens = []
    for u in units:
        u = field(u)
        if not _unit_norm_ok(u):
            raise ValueError(f"{u} does not have norm +-1")
        if not ring.contains(u) or not all(lat.contains(u * b) for b in lat.basis):
            raise ValueError(f"{u} does not stabilize the lattice")
        gens.append(_positive_rep(u, log_embedding(u, 64).floats()))
    units = tuple(g[0] for g in gens)
    logs = np.array([g[1] for g in gens])
    reg = _regulator(field, units)
    if reg.contains(0):
        raise ValueError("supplied units are multiplicatively dependent")
    return UnitGroup(ring, units, logs, reg, "assumed", False, 0.0, 0)


def fundamentality_check(group: UnitGroup, cap: int | None = None) -> tuple[bool, int, list]:
    """Search ring coordinates |c_i| <= cap for units off the claimed log lattice.

    Returns (passed, number of units seen, offending coordinate vectors).
    A unit whose log coordinates are not integers reduces to a unit strictly
    inside the fundamental parallelepiped.
    """
    cap = group.cert_cap if cap is None else cap
    ring = group.ring
    field = ring.field
    basis = tuple(ring.elements)
    form, scale = integer_norm_form(basis)
    n = field.degree
    rng = np.arange(-cap, cap + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * n), indexing="ij")
    vals = np.abs(_eval_form_grid(form, grids))
    target = int(scale) if scale.denominator == 1 else None
    if target is None:
        return True, 0, []
    hits = np.argwhere(vals == target) - cap
    if len(hits) == 0:
        return True, 0, []
    logs = _log_floats(field, basis, hits)
    coef = logs @ group.pinv().T
    bad = np.abs(coef - np.round(coef)).max(axis=1) > 1e-6
    offending = [tuple(int(v) for v in hits[i]) for i in np.nonzero(bad)[0]]
    return not offending, len(hits), offending


# ---------------------------------------------------------------------------


def covering_radius(logs: np.ndarray, n: int = 256) -> float:
    """Sup-norm covering radius of the lattice spanned by the rows of logs.

    Rank 1 is exact.  For rank 2 the distance to the nearest lattice point is
    sampled on an n x n grid of the fundamental parallelogram; the distance
    is 1-Lipschitz, so adding the largest gap to the grid bounds it from above.
    """
    logs = np.asarray(logs, dtype=float)
    crude = 0.5 * float(np.abs(logs).max(axis=1).sum())
    if len(logs) == 1:
        return 0.5 * float(np.abs(logs[0]).max())
    if len(logs) != 2:
        return crude
    v1, v2 = logs
    a = (np.arange(n) + 0.5) / n
    A, B = np.meshgrid(a, a, indexing="ij")
    P = A.ravel()[:, None] * v1 + B.ravel()[:, None] * v2
    best = np.full(len(P), np.inf)
    for i, j in itertools.product(range(-2, 4), repeat=2):
        best = np.minimum(best, np.abs(P - (i * v1 + j * v2)).max(axis=1))
    slack = (np.abs(v1).max() + np.abs(v2).max()) / (2 * n)
    return min(crude, float(best.max() + slack) * (1 + 1e-9))


def kappa(group: UnitGroup) -> KappaBound:
    """kappa = exp(sum_k |log u_k|_inf), an upper bound for the covering constant."""
    rho = group.rho_hat
    return KappaBound(math.exp(2 * rho), rho)


def dominant_target(field: NumberField, t: float) -> np.ndarray:
    d = field.degree - 1
    lt = math.log(t)
    return np.array([lt] + [-lt / d] * (field.embedding_count - 1))


@dataclass(frozen=True)
class DominantUnit:
    t: float
    exps: tuple
    unit: FieldElement = dc_field(repr=False)
    log: tuple = ()
    distance: float = 0.0


def _nearest_exps(group: UnitGroup, target: np.ndarray) -> tuple[tuple, float]:
    P = group.pinv()
    coef = P @ target
    radius = group.covering_radius() * (1 + 1e-9) + 1e-12
    spans = [int(math.ceil(np.abs(row).sum() * radius)) + 1 for row in P]
    best = None
    for delta in itertools.product(*[range(-s, s + 1) for s in spans]):
        a = tuple(int(math.floor(c)) + dk for c, dk in zip(coef, delta))
        dist = float(np.abs(group.log_of(a) - target).max())
        key = (round(dist, 12), a)
        if best is None or key < best[0]:
            best = (key, a, dist)
    return best[1], best[2]


def dominant_unit(group: UnitGroup, t: float) -> DominantUnit:
    """The unit, positive at sigma_0, whose log vector is sup-closest to (log t, -log t/d, ...)."""
    if t < 1:
        raise ValueError("t must be at least 1")
    target = dominant_target(group.field, t)
    exps, dist = _nearest_exps(group, target)
    u = group.unit(exps)
    if embed(u, 0, 64) < 0:
        u = -u
    return DominantUnit(float(t), exps, u, tuple(group.log_of(exps)), dist)


def in_dominant_box(group: UnitGroup, exps: Sequence[int], t: float) -> bool:
    """Whether the log vector lies in the cube of side log(kappa) centered at the target."""
    target = dominant_target(group.field, t)
    return float(np.abs(group.log_of(exps) - target).max()) <= group.rho_hat * (1 + 1e-9)


def dominant_stream(group: UnitGroup, t0: float, count: int) -> list:
    """Dominant units for increasing t, each strictly larger than the last."""
    out: list = []
    if count <= 0:
        return out
    if group.rank == 1:
        first = dominant_unit(group, t0)
        k = first.exps[0]
        while len(out) < count:
            if k >= 0:
                t = math.exp(float(group.logs[0][0]) * k)
                if t >= t0:
                    exps = (k,)
                    out.append(DominantUnit(t, exps, group.unit(exps), tuple(group.log_of(exps)),
                                            0.0))
            k += 1
        return out
    step = min(float(np.linalg.norm(v)) for v in group.logs) / 64
    lt = math.log(t0)
    last = -math.inf
    guard = 0
    while len(out) < count:
        du = dominant_unit(group, math.exp(lt))
        if du.log[0] > last + 1e-12:
            out.append(du)
            last = du.log[0]
        lt += step
        guard += 1
        if guard > 10**6:
            raise SearchExhausted("dominant stream stalled")
    return out


def sign_pattern(u: FieldElement, prec: int = 64) -> tuple:
    """Certified signs of the real embeddings of u."""
    out = []
    for i in range(u.field.r_plus_1):
        w = prec
        while True:
            v = embed(u, i, w)
            if v > 0:
                out.append(1)
                break
            if v < 0:
                out.append(-1)
                break
            if u.is_zero():
                out.append(0)
                break
            w *= 2
            if w > u.field.max_prec:
                raise PrecisionExhausted("sign not resolved")
    return tuple(out)


@dataclass(frozen=True)
class RegionUnit:
    exps: tuple
    log_u: float
    ratio: float
    unit: FieldElement = dc_field(repr=False)


def units_in_region(group: UnitGroup, c1, c2, x0_max: float, prec: int = DEFAULT_PREC) -> list:
    """All u = u1^(2a1) u2^(2a2) with 0 < log u <= x0_max and c1 < sigma_1(u)/sigma_2(u) < c2."""
    field = group.field
    if not (field.is_totally_real and field.degree == 3):
        raise ValueError("region search needs a totally real cubic field")
    c1, c2 = float(c1), float(c2)
    if not 0 < c1 < c2:
        raise ValueError("need 0 < c1 < c2")
    L = group.logs
    # (a1, a2) -> (log u, log sigma_1 - log sigma_2)
    A = 2 * np.array([[L[0][0], L[1][0]], [L[0][1] - L[0][2], L[1][1] - L[1][2]]])
    Ainv = np.linalg.inv(A)
    corners = [Ainv @ np.array([x, y]) for x in (0.0, x0_max)
               for y in (math.log(c1), math.log(c2))]
    lo = np.floor(np.min(corners, axis=0)).astype(int) - 1
    hi = np.ceil(np.max(corners, axis=0)).astype(int) + 1
    with ctx.workprec(prec):
        balls = [log_embedding(u, prec).values for u in group.units]
        lc1, lc2 = arb(c1).log(), arb(c2).log()
        xmax = arb(x0_max)
        out = []
        for a1 in range(int(lo[0]), int(hi[0]) + 1):
            for a2 in range(int(lo[1]), int(hi[1]) + 1):
                x = [2 * (a1 * balls[0][i] + a2 * balls[1][i]) for i in range(3)]
                diff = x[1] - x[2]
                conds = [x[0] > 0, x[0] <= xmax, diff > lc1, diff < lc2]
                negs = [x[0] <= 0, x[0] > xmax, diff <= lc1, diff >= lc2]
                if any(negs):
                    continue
                if not all(conds):
                    raise PrecisionExhausted("region membership not resolved")
                exps = (2 * a1, 2 * a2)
                out.append(RegionUnit((a1, a2), float(x[0].mid()), math.exp(float(diff.mid())),
                                      group.unit(exps)))
    out.sort(key=lambda r: r.log_u)
    return out
