"""Exact arithmetic in real quadratic and cubic fields.

Elements are stored by their rational coordinates in the power basis
1, a, ..., a^(n-1) of the generator ``a``.  Embeddings are evaluated with
arb/acb balls: real roots are isolated with Sturm sequences over Q and
refined by Newton steps whose output is accepted only after an exact sign
check, so every ball returned here provably contains the true value.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from flint import acb, arb, ctx, fmpq, fmpq_poly

from .errors import (
    AmbiguousRootError,
    DivisionByZero,
    NoRealRootError,
    PrecisionExhausted,
    ReducibleError,
)

logger = logging.getLogger(__name__)

Rational = Fraction
Ball = arb
CBall = acb

DEFAULT_PREC = 128
MAX_PREC = 8192

RootSelector = Union[str, tuple, list, None]


def to_fraction(x) -> Fraction:
    """Exact conversion of ints, Fractions, fmpq, decimal strings or 'a/b' strings."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, fmpq):
        return Fraction(int(x.p), int(x.q))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(int(x))


def fraction_to_fmpq(x: Fraction) -> fmpq:
    return fmpq(x.numerator, x.denominator)


def arb_from_fraction(x: Fraction) -> arb:
    if x.denominator == 1:
        return arb(x.numerator)
    return arb(fmpq(x.numerator, x.denominator))


def arb_mid_fraction(x: arb) -> Fraction:
    man, exp = x.mid().man_exp()
    man, exp = int(man), int(exp)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


# ---------------------------------------------------------------------------
# Sturm sequences and root isolation


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def sturm_sequence(f: fmpq_poly) -> list[fmpq_poly]:
    seq = [f, f.derivative()]
    while seq[-1].degree() > 0:
        r = -(seq[-2] % seq[-1])
        if r.is_zero():
            break
        seq.append(r)
    return seq


def _variations(seq: Sequence[fmpq_poly], x: Fraction) -> int:
    fx = fraction_to_fmpq(x)
    signs = [s for s in (_sign(p(fx)) for p in seq) if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots(seq: Sequence[fmpq_poly], lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots in the half-open interval (lo, hi]."""
    return _variations(seq, lo) - _variations(seq, hi)


def isolate_real_roots(coeffs: Sequence[int]) -> list[tuple[Fraction, Fraction]]:
    """Disjoint rational intervals (lo, hi], each holding exactly one root, sorted."""
    f = fmpq_poly(list(coeffs))
    seq = sturm_sequence(f)
    bound = Fraction(1 + max(abs(c) for c in coeffs[:-1]))
    out = []
    stack = [(-bound, bound)]
    while stack:
        lo, hi = stack.pop()
        k = count_real_roots(seq, lo, hi)
        if k == 0:
            continue
        if k == 1:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.append((lo, mid))
        stack.append((mid, hi))
    return sorted(out)


def rational_roots(coeffs: Sequence[int]) -> list[int]:
    """Integer roots of a monic integer polynomial (the only possible rational roots)."""
    a0 = coeffs[0]
    if a0 == 0:
        return [0]
    f = fmpq_poly(list(coeffs))
    n = abs(a0)
    divisors = set()
    for k in range(1, math.isqrt(n) + 1):
        if n % k == 0:
            divisors.update((k, n // k))
    return sorted(r for d in divisors for r in (d, -d) if f(r) == 0)


def _horner(f: fmpq_poly, x: arb) -> arb:
    acc = arb(0)
    for c in reversed(f.coeffs()):
        acc = acc * x + arb(c)
    return acc


def _refine(f: fmpq_poly, df: fmpq_poly, lo: Fraction, hi: Fraction, bits: int):
    """Shrink an isolating interval to width <= 2^-bits.

    Newton iterates only propose a candidate; it is accepted after an exact
    sign check at rational endpoints inside the old interval.
    """
    eps = Fraction(1, 2**bits)
    s_lo = _sign(f(fraction_to_fmpq(lo)))
    while hi - lo > eps:
        with ctx.workprec(bits + 64):
            x = arb(fraction_to_fmpq((lo + hi) / 2))
            for _ in range(4 + max(1, bits).bit_length()):
                dx = _horner(f, x) / _horner(df, x)
                if not dx.is_finite():
                    break
                x = (x - dx).mid()
            guess = arb_mid_fraction(x) if x.is_finite() else (lo + hi) / 2
        scale = 2 ** (bits + 1)
        a = Fraction(math.floor(guess * scale), scale)
        b = a + Fraction(1, scale)
        if lo <= a and b <= hi:
            sa = _sign(f(fraction_to_fmpq(a)))
            sb = _sign(f(fraction_to_fmpq(b)))
            if sa != sb:
                return a, b
        for _ in range(6):
            mid = (lo + hi) / 2
            if _sign(f(fraction_to_fmpq(mid))) == s_lo:
                lo = mid
            else:
                hi = mid
    return lo, hi


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingSet:
    """Balls around sigma_0(a), ..., sigma_r(a) and the upper-half-plane complex roots."""

    real_roots: tuple
    complex_pairs: tuple
    signature: tuple


class NumberField:
    """Q(a) for a monic irreducible integer polynomial of degree 2 or 3.

    ``root`` picks the real root used as the identity embedding: an
    isolating interval ``(lo, hi)`` or one of ``"largest"``, ``"smallest"``,
    ``"positive"`` (the unique positive root) and ``"smallest-positive"``.
    """

    def __init__(self, coeffs: Sequence[int], root: RootSelector = "largest",
                 max_prec: int = MAX_PREC):
        coeffs = [int(c) for c in coeffs]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        n = len(coeffs) - 1
        if n not in (2, 3):
            raise ValueError(f"degree must be 2 or 3, got {n}")
        if coeffs[-1] != 1:
            raise ValueError("polynomial must be monic")
        rr = rational_roots(coeffs)
        if rr:
            raise ReducibleError(f"polynomial has rational root {rr[0]}")
        self.coeffs = tuple(coeffs)
        self.degree = n
        self.max_prec = max_prec
        self._poly = fmpq_poly(coeffs)
        self._dpoly = self._poly.derivative()

        intervals = isolate_real_roots(coeffs)
        if not intervals:
            raise NoRealRootError("polynomial has no real root")
        sel = self._select(intervals, root)
        self.root_interval = intervals[sel]
        # sigma_0 first, the other real roots ascending
        self._real_intervals = [intervals[sel]] + [iv for i, iv in enumerate(intervals) if i != sel]
        self.r_plus_1 = len(intervals)
        self.s = (n - self.r_plus_1) // 2
        self._interval_cache: dict = {}
        self._root_cache: dict = {}

        self._power_traces = self._newton_power_sums(2 * n)

    def _select(self, intervals, root) -> int:
        f = self._poly
        seq = sturm_sequence(f)
        if root is None or root == "largest":
            return len(intervals) - 1
        if root == "smallest":
            return 0
        if root in ("positive", "smallest-positive"):
            pos = [i for i, (lo, hi) in enumerate(intervals)
                   if lo >= 0 or (hi > 0 and count_real_roots(seq, Fraction(0), hi) == 1)]
            if not pos:
                raise NoRealRootError("no positive real root")
            if root == "positive" and len(pos) > 1:
                raise AmbiguousRootError("more than one positive root")
            return pos[0]
        lo, hi = (to_fraction(v) for v in root)
        if not lo < hi:
            raise ValueError("root selector must satisfy lo < hi")
        k = count_real_roots(seq, lo, hi)
        if k == 0:
            raise NoRealRootError(f"no real root in ({lo}, {hi}]")
        if k > 1:
            raise AmbiguousRootError(f"{k} real roots in ({lo}, {hi}]")
        for i, (a, b) in enumerate(intervals):
            # the selected root is the unique one in both intervals
            if count_real_roots(seq, max(a, lo), min(b, hi)) == 1 and max(a, lo) < min(b, hi):
                return i
        raise NoRealRootError("selector does not meet an isolated root")

    def _newton_power_sums(self, count: int) -> tuple:
        # Tr(a^k) from Newton's identities for x^n + c_{n-1} x^{n-1} + ... + c_0
        n = self.degree
        c = self.coeffs
        e = [Fraction(1)] + [Fraction((-1) ** k * c[n - k]) for k in range(1, n + 1)]
        p = [Fraction(n)]
        for k in range(1, count):
            total = Fraction(0)
            for i in range(1, min(k, n + 1)):
                total += (-1) ** (i - 1) * e[i] * p[k - i]
            if k <= n:
                total += (-1) ** (k - 1) * k * e[k]
            p.append(total)
        return tuple(p)

    # -- basic API

    @property
    def signature(self) -> tuple:
        return (self.r_plus_1, self.s)

    @property
    def is_totally_real(self) -> bool:
        return self.s == 0

    @property
    def embedding_count(self) -> int:
        """r + s + 1, the number of embeddings up to complex conjugation."""
        return self.r_plus_1 + self.s

    def __eq__(self, other):
        return (isinstance(other, NumberField) and self.coeffs == other.coeffs
                and self.root_interval == other.root_interval)

    def __hash__(self):
        return hash((self.coeffs, self.root_interval))

    def __repr__(self):
        return f"NumberField({list(self.coeffs)}, root={self.root_interval})"

    def element(self, coords: Iterable) -> "FieldElement":
        return FieldElement(self, coords)

    def __call__(self, coords) -> "FieldElement":
        if isinstance(coords, FieldElement):
            return coords
        if isinstance(coords, (list, tuple)):
            return FieldElement(self, coords)
        return FieldElement(self, [coords])

    @property
    def gen(self) -> "FieldElement":
        return FieldElement(self, [0, 1])

    @property
    def one(self) -> "FieldElement":
        return FieldElement(self, [1])

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(self, [])

    # -- embeddings

    def real_interval(self, i: int, bits: int) -> tuple[Fraction, Fraction]:
        key = (i, bits)
        if key not in self._interval_cache:
            lo, hi = self._real_intervals[i]
            # start from the finest cached interval for this root
            finer = [b for (j, b) in self._interval_cache if j == i and b < bits]
            if finer:
                lo, hi = self._interval_cache[(i, max(finer))]
            self._interval_cache[key] = _refine(self._poly, self._dpoly, lo, hi, bits)
        return self._interval_cache[key]

    def root_ball(self, i: int, prec: int):
        """Ball around sigma_i(a) with radius about 2^-prec; complex for i > r."""
        key = (i, prec)
        if key in self._root_cache:
            return self._root_cache[key]
        with ctx.workprec(prec + 32):
            if i < self.r_plus_1:
                lo, hi = self.real_interval(i, prec + 8)
                ball = arb(fraction_to_fmpq((lo + hi) / 2), fraction_to_fmpq((hi - lo) / 2))
            elif self.s == 1 and i == self.r_plus_1:
                # deflate by the certified real root, solve the quadratic factor
                r = self.root_ball(0, prec + 16)
                _, a1, a2 = (arb(c) for c in self.coeffs[:3])
                b = a2 + r
                c = a1 + r * b
                disc = 4 * c - b * b
                if not disc > 0:
                    raise PrecisionExhausted("complex pair not separated")
                ball = acb(-b / 2, disc.sqrt() / 2)
            else:
                raise IndexError(f"embedding index {i} out of range")
        self._root_cache[key] = ball
        return ball

    def embeddings(self, prec: int = DEFAULT_PREC) -> EmbeddingSet:
        reals = tuple(self.root_ball(i, prec) for i in range(self.r_plus_1))
        cplx = tuple(self.root_ball(self.r_plus_1 + j, prec) for j in range(self.s))
        return EmbeddingSet(reals, cplx, self.signature)

    def root_floats(self) -> list:
        """sigma_i(a) as Python floats/complex, for numerical prefilters."""
        out = []
        for i in range(self.embedding_count):
            b = self.root_ball(i, 64)
            if isinstance(b, acb):
                out.append(complex(float(b.real.mid()), float(b.imag.mid())))
            else:
                out.append(float(b.mid()))
        return out


class FieldElement:
    """Immutable element c_0 + c_1 a + ... of a NumberField with rational c_i."""

    __slots__ = ("field", "coords", "_hash")

    def __init__(self, field: NumberField, coords: Iterable):
        cs = [to_fraction(c) for c in coords]
        n = field.degree
        if len(cs) > n:
            raise ValueError(f"expected at most {n} coordinates, got {len(cs)}")
        cs += [Fraction(0)] * (n - len(cs))
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "coords", tuple(cs))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field is not self.field and other.field != self.field:
                raise ValueError("elements belong to different fields")
            return other
        if isinstance(other, (int, Fraction, fmpq)):
            return FieldElement(self.field, [to_fraction(other)])
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, [a + b for a, b in zip(self.coords, o.coords)])

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, [-a for a in self.coords])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, [a - b for a, b in zip(self.coords, o.coords)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.field.degree == 2:
            return _mul2(self, o)
        return _mul3(self, o)

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise DivisionByZero("inverse of zero")
        m = mult_matrix(self)
        sol = _solve(m, [Fraction(1)] + [Fraction(0)] * (self.field.degree - 1))
        return FieldElement(self.field, sol)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, k: int):
        k = int(k)
        base = self if k >= 0 else self.inverse()
        k = abs(k)
        result = self.field.one
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        o = self._coerce(other) if not isinstance(other, FieldElement) else other
        if o is NotImplemented:
            return False
        return self.field == o.field and self.coords == o.coords

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.field, self.coords))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        terms = []
        for k, c in enumerate(self.coords):
            if c:
                terms.append(f"{c}" if k == 0 else f"{c}*a" if k == 1 else f"{c}*a^{k}")
        return " + ".join(terms) if terms else "0"

    def is_zero(self) -> bool:
        return not any(self.coords)

    def is_rational(self) -> bool:
        return not any(self.coords[1:])

    def trace(self) -> Fraction:
        return trace(self)

    def norm(self) -> Fraction:
        return norm(self)

    def embed(self, i: int, prec: int = DEFAULT_PREC):
        return embed(self, i, prec)


def _mul3(x: FieldElement, y: FieldElement) -> FieldElement:
    """Product for degree 3, reducing a^3 and a^4 with the minimal polynomial."""
    a0, a1, a2 = x.coords
    b0, b1, b2 = y.coords
    p0 = a0 * b0
    p1 = a0 * b1 + a1 * b0
    p2 = a0 * b2 + a1 * b1 + a2 * b0
    p3 = a1 * b2 + a2 * b1
    p4 = a2 * b2
    c0, c1, c2 = x.field.coeffs[:3]
    # a^3 = -c2 a^2 - c1 a - c0; fold a^4 first
    if p4:
        p3 -= c2 * p4
        p2 -= c1 * p4
        p1 -= c0 * p4
    if p3:
        p2 -= c2 * p3
        p1 -= c1 * p3
        p0 -= c0 * p3
    return FieldElement(x.field, (p0, p1, p2))


def _mul2(x: FieldElement, y: FieldElement) -> FieldElement:
    a0, a1 = x.coords
    b0, b1 = y.coords
    c0, c1 = x.field.coeffs[:2]
    p2 = a1 * b1
    return FieldElement(x.field, (a0 * b0 - c0 * p2, a0 * b1 + a1 * b0 - c1 * p2))


def _det(m) -> Fraction:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if n == 3:
        return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
    raise ValueError("only n <= 3 supported")


def _solve(m, rhs) -> list:
    # Cramer's rule is exact and adequate for n <= 3
    d = _det(m)
    if d == 0:
        raise DivisionByZero("singular system")
    n = len(m)
    out = []
    for j in range(n):
        mj = [[rhs[i] if k == j else m[i][k] for k in range(n)] for i in range(n)]
        out.append(_det(mj) / d)
    return out


def mult_matrix(x: FieldElement) -> list:
    """Matrix of y -> x*y in the power basis; column j holds x * a^j."""
    n = x.field.degree
    cols = []
    cur = x
    for j in range(n):
        cols.append(cur.coords)
        if j < n - 1:
            cur = cur * x.field.gen
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def trace(x: FieldElement) -> Fraction:
    pt = x.field._power_traces
    return sum((c * pt[k] for k, c in enumerate(x.coords)), Fraction(0))


def norm(x: FieldElement) -> Fraction:
    return _det(mult_matrix(x))


def signature(field: NumberField) -> tuple:
    return field.signature


def _eval_ball(coords, root):
    acc = arb(0) if isinstance(root, arb) else acb(0)
    for c in reversed(coords):
        acc = acc * root + arb_from_fraction(c)
    return acc


def embed(x: FieldElement, i: int, prec: int = DEFAULT_PREC):
    """sigma_i(x) as a ball of radius <= 2^-prec.

    Indices 0..r are the real embeddings (0 is the identity), r+1..r+s the
    complex ones taken in the upper half plane.
    """
    field = x.field
    if not 0 <= i < field.embedding_count:
        raise IndexError(f"embedding index {i} out of range")
    if x.is_rational():
        with ctx.workprec(prec + 16):
            val = arb_from_fraction(x.coords[0])
            return val if i < field.r_plus_1 else acb(val)
    target = arb(1) / arb(2) ** prec if prec < 60000 else None
    mag = max(1, max((abs(c) for c in x.coords), default=1))
    w = prec + 16 + mag.numerator.bit_length()
    while w <= field.max_prec:
        with ctx.workprec(w):
            val = _eval_ball(x.coords, field.root_ball(i, w))
            rad = val.rad() if isinstance(val, arb) else max(val.real.rad(), val.imag.rad())
            if target is None or rad <= target * (1 if isinstance(val, arb) else 0.5):
                return val
        w *= 2
    raise PrecisionExhausted(f"embedding {i} of {x} not resolved below {field.max_prec} bits")


def embed_all(x: FieldElement, prec: int = DEFAULT_PREC) -> list:
    return [embed(x, i, prec) for i in range(x.field.embedding_count)]


def parse_poly(text: str) -> list[int]:
    """Coefficient list low-to-high, e.g. "-2,0,0,1" for x^3 - 2."""
    text = text.strip().strip("[]")
    if not text:
        raise ValueError("empty polynomial")
    return [int(t) for t in text.replace(" ", "").split(",")]


def parse_root(text) -> RootSelector:
    if text is None:
        return "largest"
    if isinstance(text, (list, tuple)):
        return tuple(to_fraction(v) for v in text)
    text = str(text).strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        return (to_fraction(lo), to_fraction(hi))
    if text in ("largest", "smallest", "positive", "smallest-positive"):
        return text
    raise ValueError(f"unrecognised root selector {text!r}")
