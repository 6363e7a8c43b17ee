"""Lattices inside a number field: trace-form Gram matrices, dual bases,
multiplier rings and enumeration of points in Minkowski boxes."""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import numpy as np
from flint import ctx, fmpq_mat, fmpz_mat

from .arith import (
    DEFAULT_PREC,
    FieldElement,
    NumberField,
    arb_from_fraction,
    embed,
    fraction_to_fmpq,
    mult_matrix,
    to_fraction,
    trace,
)
from .errors import PrecisionExhausted, SingularGram

logger = logging.getLogger(__name__)


def _to_fmpq_mat(rows) -> fmpq_mat:
    return fmpq_mat([[fraction_to_fmpq(to_fraction(v)) for v in row] for row in rows])


def _from_fmpq_mat(m: fmpq_mat) -> list:
    return [[to_fraction(m[i, j]) for j in range(m.ncols())] for i in range(m.nrows())]


def _lcm_denominator(values) -> int:
    d = 1
    for v in values:
        d = d * v.denominator // math.gcd(d, v.denominator)
    return d


@dataclass(frozen=True)
class GramMatrix:
    entries: tuple
    det: Fraction


@dataclass(frozen=True)
class DualBasis:
    elements: tuple
    inverse_gram: tuple


class ModuleLattice:
    """The Z-module spanned by basis[0] = 1, basis[1], ..., basis[d]."""

    def __init__(self, field: NumberField, basis: Sequence | None = None):
        if basis is None:
            basis = [field.gen ** k for k in range(field.degree)]
        basis = tuple(field(b) for b in basis)
        if len(basis) != field.degree:
            raise ValueError(f"need {field.degree} basis elements, got {len(basis)}")
        if basis[0] != field.one:
            raise ValueError("first basis element must be 1")
        self.field = field
        self.basis = basis
        self.d = field.degree - 1
        self._gram = None
        self._dual = None
        self._coord_inv = None

    def __repr__(self):
        return f"ModuleLattice({self.field!r}, basis={list(self.basis)})"

    @property
    def alpha(self) -> tuple:
        """The approximated vector (alpha_1, ..., alpha_d)."""
        return self.basis[1:]

    def gram(self) -> GramMatrix:
        if self._gram is None:
            self._gram = gram(self)
        return self._gram

    def dual(self) -> DualBasis:
        if self._dual is None:
            self._dual = dual_basis(self)
        return self._dual

    def coords(self, x: FieldElement) -> list:
        """Rational coordinates of x in this lattice's basis."""
        return basis_coords(self.basis, x, self)

    def contains(self, x: FieldElement) -> bool:
        return all(c.denominator == 1 for c in self.coords(x))


def basis_coords(basis: Sequence[FieldElement], x: FieldElement, cache_owner=None) -> list:
    inv = None
    if cache_owner is not None:
        inv = getattr(cache_owner, "_coord_inv", None)
    if inv is None:
        n = len(basis)
        cols = _to_fmpq_mat([[basis[j].coords[i] for j in range(n)] for i in range(n)])
        inv = _from_fmpq_mat(cols.inv())
        if cache_owner is not None:
            cache_owner._coord_inv = inv
    return [sum((row[k] * x.coords[k] for k in range(len(row))), Fraction(0)) for row in inv]


def gram(lat: ModuleLattice) -> GramMatrix:
    """A_ij = Tr(alpha_i alpha_j)."""
    b = lat.basis
    n = len(b)
    entries = tuple(tuple(trace(b[i] * b[j]) for j in range(n)) for i in range(n))
    det = to_fraction(_to_fmpq_mat(entries).det())
    if det == 0:
        raise SingularGram("basis elements are linearly dependent over Q")
    return GramMatrix(entries, det)


def dual_basis(lat: ModuleLattice) -> DualBasis:
    """alpha_j* = sum_i a*_ij alpha_i where (a*_ij) = A^-1."""
    g = lat.gram()
    inv = _from_fmpq_mat(_to_fmpq_mat(g.entries).inv())
    n = len(lat.basis)
    elems = []
    for j in range(n):
        x = lat.field.zero
        for i in range(n):
            if inv[i][j]:
                x = x + inv[i][j] * lat.basis[i]
        elems.append(x)
    return DualBasis(tuple(elems), tuple(tuple(r) for r in inv))


def dual_coords(x: FieldElement, lat: ModuleLattice) -> list:
    """Coordinates of x in the dual basis: (Tr(x alpha_0), ..., Tr(x alpha_d))."""
    return [trace(x * b) for b in lat.basis]


def dual_membership(x: FieldElement, lat: ModuleLattice) -> bool:
    return all(c.denominator == 1 for c in dual_coords(x, lat))


def dual_stability_check(g: FieldElement, lat: ModuleLattice) -> bool:
    """True when g * alpha_j* lies in the dual lattice for every j."""
    return all(dual_membership(g * a, lat) for a in lat.dual().elements)


def unit_action(u: FieldElement, lat: ModuleLattice) -> list:
    """Integer matrix M with dual-coords(u x) = M dual-coords(x)."""
    dual = lat.dual().elements
    n = len(dual)
    m = [[trace(u * dual[j] * lat.basis[i]) for j in range(n)] for i in range(n)]
    out = []
    for row in m:
        if any(v.denominator != 1 for v in row):
            raise ValueError("element does not preserve the dual lattice")
        out.append([int(v) for v in row])
    return out


# ---------------------------------------------------------------------------
# Minkowski embedding


def minkowski_rows(field: NumberField) -> list:
    """Labels (kind, embedding index) of the Minkowski coordinates, in order."""
    rows = [("real", i) for i in range(field.r_plus_1)]
    for j in range(field.s):
        rows += [("re", field.r_plus_1 + j), ("im", field.r_plus_1 + j)]
    return rows


def minkowski_balls(x: FieldElement, prec: int = DEFAULT_PREC) -> list:
    f = x.field
    out = [embed(x, i, prec) for i in range(f.r_plus_1)]
    for j in range(f.s):
        z = embed(x, f.r_plus_1 + j, prec)
        out += [z.real, z.imag]
    return out


def minkowski_matrix(elements: Sequence[FieldElement], prec: int = 80) -> np.ndarray:
    """Float matrix whose column k is the Minkowski embedding of elements[k]."""
    cols = []
    for x in elements:
        cols.append([float(b.mid()) for b in minkowski_balls(x, prec)])
    return np.array(cols, dtype=float).T


@functools.lru_cache(maxsize=256)
def _cached_minkowski(basis: tuple) -> np.ndarray:
    m = minkowski_matrix(basis)
    m.setflags(write=False)
    return m


def b_matrix(lat: ModuleLattice, prec: int = DEFAULT_PREC) -> list:
    """diag(I, 2, -2, ...) times the Minkowski columns of the basis, as ball rows."""
    f = lat.field
    n = len(lat.basis)
    cols = [minkowski_balls(b, prec) for b in lat.basis]
    weights = [1] * f.r_plus_1 + [2, -2] * f.s
    return [[cols[j][i] * weights[i] for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# Multiplier ring


@dataclass(frozen=True)
class MultiplierRingBasis:
    elements: tuple
    index: int
    lattice: ModuleLattice = dc_field(repr=False)
    lattice_coords: tuple = ()

    @property
    def field(self) -> NumberField:
        return self.lattice.field

    def coords(self, x: FieldElement) -> list:
        return basis_coords(self.elements, x)

    def contains(self, x: FieldElement) -> bool:
        return all(c.denominator == 1 for c in self.coords(x))

    def is_full_lattice(self) -> bool:
        return self.index == 1


def _hnf_rows(rows) -> list:
    return [[int(v) for v in r] for r in fmpz_mat(rows).hnf().tolist()]


def multiplier_ring(lat: ModuleLattice) -> MultiplierRingBasis:
    """Z-basis of {g in Lambda : g * Lambda subset Lambda}, first element 1."""
    b = lat.basis
    n = len(b)
    # T[(i, r)][k]: coordinate r of b_k * b_i in the lattice basis
    blocks = []
    for i in range(n):
        cols = [lat.coords(b[k] * b[i]) for k in range(n)]
        blocks.extend([cols[k][r] for k in range(n)] for r in range(n))
    D = _lcm_denominator(v for row in blocks for v in row)
    m = len(blocks)
    rows = []
    for k in range(n):
        rows.append([int(blocks[t][k] * D) for t in range(m)] + [1 if j == k else 0 for j in range(n)])
    for t in range(m):
        rows.append([D if j == t else 0 for j in range(m)] + [0] * n)
    h = _hnf_rows(rows)
    sol = [r[m:] for r in h if not any(r[:m]) and any(r[m:])]
    # reorder so the basis starts with 1: HNF on reversed columns, rows reversed
    rev = _hnf_rows([list(reversed(r)) for r in sol])
    rev = [r for r in rev if any(r)]
    gens = [list(reversed(r)) for r in reversed(rev)]
    if len(gens) != n:
        raise ArithmeticError("stabilizer computation lost rank")
    index = abs(int(fmpz_mat(gens).det()))
    elems = []
    for g in gens:
        x = lat.field.zero
        for k in range(n):
            if g[k]:
                x = x + g[k] * b[k]
        elems.append(x)
    if elems[0] != lat.field.one:
        raise ArithmeticError("multiplier ring basis does not start with 1")
    return MultiplierRingBasis(tuple(elems), index, lat, tuple(tuple(g) for g in gens))


# ---------------------------------------------------------------------------
# Enumeration of lattice points in Minkowski boxes


def _radii(field: NumberField, R) -> list:
    if isinstance(R, (list, tuple)):
        rs = [to_fraction(r) for r in R]
        if len(rs) != field.embedding_count:
            raise ValueError("one radius per embedding expected")
    else:
        rs = [to_fraction(R)] * field.embedding_count
    if any(r <= 0 for r in rs):
        raise ValueError("radius must be positive")
    return rs


def _lll_transform(E: np.ndarray):
    """Unimodular T (integer rows) such that the columns of E @ T.T are LLL-reduced.

    Returns (T, reduced matrix) or None when the float input is too degenerate.
    """
    nz = np.abs(E[E != 0])
    if nz.size == 0:
        return None
    e_max = math.frexp(float(nz.max()))[1]
    e_min = math.frexp(float(nz.min()))[1]
    K = max(60 - e_max, 30 - e_min)
    rows = [[int(round(math.ldexp(float(v), K))) for v in col] for col in E.T]
    M = fmpz_mat(rows)
    if M.rank() < len(rows):
        return None
    L, T = M.lll(transform=True)
    Tl = np.array([[int(v) for v in r] for r in T.tolist()], dtype=object)
    Ll = np.array([[math.ldexp(int(v), -K) for v in r] for r in L.tolist()], dtype=float)
    return Tl, Ll.T


def _fincke_pohst(E: np.ndarray, bound: float) -> np.ndarray:
    """All integer c with ||E c||^2 <= bound (slightly enlarged), as an int64 array."""
    n = E.shape[1]
    red = _lll_transform(E)
    if red is not None:
        T, Er = red
    else:
        T, Er = None, E
    G = Er.T @ Er
    U = np.linalg.cholesky(G).T  # G = U^T U, U upper triangular
    diag = np.diag(U).copy()
    mu = U / diag[:, None]
    bound = bound * (1 + 1e-6) + 1e-9
    found = []
    c = np.zeros(n, dtype=np.int64)

    def rec(i, rem):
        center = -float(mu[i, i + 1:] @ c[i + 1:]) if i + 1 < n else 0.0
        half = math.sqrt(max(rem, 0.0)) / diag[i]
        lo = math.ceil(center - half - 1e-9 * (1 + abs(center)))
        hi = math.floor(center + half + 1e-9 * (1 + abs(center)))
        if lo > hi:
            return
        if i == 0:
            block = np.zeros((hi - lo + 1, n), dtype=np.int64)
            block[:, 0] = np.arange(lo, hi + 1)
            block[:, 1:] = c[1:]
            found.append(block)
            return
        for ci in range(lo, hi + 1):
            c[i] = ci
            rec(i - 1, rem - (diag[i] * (ci - center)) ** 2)
        c[i] = 0

    rec(n - 1, bound)
    if not found:
        return np.zeros((0, n), dtype=np.int64)
    cand = np.vstack(found)
    if T is None:
        return cand
    # back to the original coordinates: c = T^t c'
    return np.array((cand.astype(object) @ T).tolist(), dtype=np.int64).reshape(-1, n)


def _exact_inside(x: FieldElement, radii: list, prec: int) -> bool:
    """Certified test of |sigma_i(x)| <= R_i for all i, refining precision as needed."""
    f = x.field
    if x.is_rational():
        v = abs(x.coords[0])
        return all(v <= r for r in radii)
    w = prec
    while w <= f.max_prec:
        decided = True
        with ctx.workprec(w + 16):
            for i, r in enumerate(radii):
                val = embed(x, i, w)
                mod = abs(val)
                rb = arb_from_fraction(r)
                if mod > rb:
                    return False
                if not mod <= rb:
                    decided = False
        if decided:
            return True
        w *= 2
    raise PrecisionExhausted(f"cannot decide box membership of {x}")


def enumerate_coords(basis: Sequence[FieldElement], R, prec: int = DEFAULT_PREC) -> list:
    """Integer coordinate vectors c with max_i |sigma_i(sum c_k basis_k)| / R_i <= 1.

    Complex embeddings are compared by modulus.  The candidates come from a
    Fincke-Pohst search of the ellipsoid sum |sigma_i|^2 / R_i^2 <= (#embeddings)
    and are then filtered in floating point with a rigorous error margin;
    anything inside the margin is settled with certified balls.
    """
    field = basis[0].field
    radii = _radii(field, R)
    E = _cached_minkowski(tuple(basis))
    rows = minkowski_rows(field)
    scale = np.array([1.0 / float(radii[idx]) for _, idx in rows])
    Es = E * scale[:, None]
    m = field.embedding_count
    cand = _fincke_pohst(Es, float(m))
    if len(cand) == 0:
        return []
    cf = cand.astype(float)
    vals = cf @ E.T  # one column per Minkowski row
    err = 1e-12 * (np.abs(cf) @ np.abs(E).T) + 1e-300
    inside = np.ones(len(cand), dtype=bool)
    unsure = np.zeros(len(cand), dtype=bool)
    col = 0
    for i in range(m):
        r = float(radii[i])
        if i < field.r_plus_1:
            mod = np.abs(vals[:, col])
            e = err[:, col]
            col += 1
        else:
            mod = np.hypot(vals[:, col], vals[:, col + 1])
            e = 2 * (err[:, col] + err[:, col + 1])
            col += 2
        out = mod > r + e
        inside &= ~out
        unsure |= (~out) & (mod >= r - e)
    result = []
    for k in np.nonzero(inside)[0]:
        c = tuple(int(v) for v in cand[k])
        if unsure[k]:
            x = field.zero
            for ck, b in zip(c, basis):
                if ck:
                    x = x + ck * b
            if not _exact_inside(x, radii, prec):
                continue
        result.append(c)
    result.sort()
    return result


def combine(basis: Sequence[FieldElement], c: Sequence[int]) -> FieldElement:
    x = basis[0].field.zero
    for ck, b in zip(c, basis):
        if ck:
            x = x + ck * b
    return x


def enumerate_points(basis: Sequence[FieldElement], R, prec: int = DEFAULT_PREC) -> list:
    """Lattice points s = sum c_k basis_k with |sigma_i(s)| <= R for every embedding."""
    return [combine(basis, c) for c in enumerate_coords(basis, R, prec)]


# ---------------------------------------------------------------------------
# Norm levels


def _poly_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v}


def _poly_add(a: dict, b: dict, sign=1) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + sign * v
    return {k: v for k, v in out.items() if v}


def norm_form(basis: Sequence[FieldElement]) -> dict:
    """N(sum c_k basis_k) as a homogeneous polynomial {exponent tuple: Fraction}."""
    n = len(basis)
    mats = [mult_matrix(b) for b in basis]
    # entry (i, j) of the multiplication matrix as a linear form in c
    lin = [[{tuple(1 if t == k else 0 for t in range(n)): mats[k][i][j]
             for k in range(n) if mats[k][i][j]} for j in range(n)] for i in range(n)]
    total: dict = {}
    for perm in itertools.permutations(range(n)):
        sign = 1
        for a in range(n):
            for b in range(a + 1, n):
                if perm[a] > perm[b]:
                    sign = -sign
        term = {tuple([0] * n): Fraction(1)}
        for i in range(n):
            term = _poly_mul(term, lin[i][perm[i]])
            if not term:
                break
        total = _poly_add(total, term, sign)
    return total


def integer_norm_form(basis: Sequence[FieldElement]) -> tuple[dict, Fraction]:
    """Primitive integer form G and scale D with N(x) = G(c) / D."""
    nf = norm_form(basis)
    den = _lcm_denominator(nf.values())
    ints = {k: int(v * den) for k, v in nf.items()}
    g = 0
    for v in ints.values():
        g = math.gcd(g, v)
    g = g or 1
    return {k: v // g for k, v in ints.items()}, Fraction(den, g)


def _eval_form_grid(form: dict, grids) -> np.ndarray:
    out = np.zeros(grids[0].shape, dtype=object if _needs_object(form, grids) else np.int64)
    for k, v in form.items():
        term = np.full(grids[0].shape, v, dtype=out.dtype)
        for g, e in zip(grids, k):
            for _ in range(e):
                term = term * g
        out = out + term
    return out


def _needs_object(form, grids) -> bool:
    cap = max(int(np.abs(g).max()) for g in grids) if grids[0].size else 0
    deg = max((sum(k) for k in form), default=0)
    bound = sum(abs(v) for v in form.values()) * max(cap, 1) ** deg
    return bound >= 2**62


def eval_form(form: dict, c: Sequence[int]) -> int:
    total = 0
    for k, v in form.items():
        t = v
        for ci, e in zip(c, k):
            t *= ci ** e
        total += t
    return total


@dataclass
class NormSpectrum:
    min_norm: Fraction
    levels: dict  # level (Fraction) -> list of witness coordinate tuples
    missing: list  # integer levels up to n_max not attained within the cap
    cap: int
    form: dict
    scale: Fraction
    certificates: dict  # missing level -> prime p proving non-attainment

    def witness(self, level) -> tuple:
        return self.levels[Fraction(level)][0]


def has_nonzero_root_mod(form: dict, n: int, p: int) -> bool:
    for c in itertools.product(range(p), repeat=n):
        if any(c) and eval_form(form, c) % p == 0:
            return True
    return False


def _factor_small(g: int) -> dict:
    out = {}
    k = 2
    while k * k <= g:
        while g % k == 0:
            out[k] = out.get(k, 0) + 1
            g //= k
        k += 1
    if g > 1:
        out[g] = out.get(g, 0) + 1
    return out


def inert_certificate(form: dict, n: int, value: int, max_pn: int = 10**6):
    """A prime p showing |G(c)| = value has no integer solution, or None.

    If G has no nonzero zero mod p then p | G(c) forces p | c, so v_p(G(c))
    is always a multiple of n; a value whose p-adic valuation is not is never
    attained.
    """
    for p, e in sorted(_factor_small(abs(value)).items()):
        if e % n and p**n <= max_pn and not has_nonzero_root_mod(form, n, p):
            return p
    return None


def norm_spectrum(basis: Sequence[FieldElement], n_max: int, cap: int = 8) -> NormSpectrum:
    """Scaled norm levels |N(s)| / min |N(s)| of lattice points with |c_i| <= cap."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    n = len(basis)
    form, scale = integer_norm_form(basis)
    rng = np.arange(-cap, cap + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * n), indexing="ij")
    vals = np.abs(_eval_form_grid(form, grids))
    nonzero = vals != 0
    nonzero[tuple([cap] * n)] = False
    gmin = int(vals[nonzero].min())
    levels: dict = {}
    idx = np.argwhere(nonzero & (vals <= gmin * n_max))
    for pos in idx:
        g = int(vals[tuple(pos)])
        lev = Fraction(g, gmin)
        levels.setdefault(lev, []).append(tuple(int(v) - cap for v in pos))
    # smallest witnesses first
    levels = {k: sorted(v, key=lambda c: (max(map(abs, c)), sum(map(abs, c)), c))
              for k, v in sorted(levels.items())}
    missing = [k for k in range(1, n_max + 1) if Fraction(k) not in levels]
    certs = {}
    for k in missing:
        p = inert_certificate(form, n, k * gmin)
        if p is not None:
            certs[k] = p
    return NormSpectrum(Fraction(gmin) / scale, levels, missing, cap, form, scale, certs)
