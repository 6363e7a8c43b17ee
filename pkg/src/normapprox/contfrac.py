"""Continued fractions of real numbers known as certified balls."""

from __future__ import annotations

from typing import Callable, Iterator

from flint import arb, ctx

from .errors import PrecisionExhausted


def cf_terms(value: Callable[[int], arb], count: int, prec: int = 256,
             max_prec: int = 1 << 16) -> list[int]:
    """The first ``count`` partial quotients of the number ``value(prec)`` encloses.

    Each floor is taken only when the ball lies strictly between two
    integers; otherwise the expansion restarts at doubled precision.  Meant
    for irrational inputs: a rational whose ball is never exact cannot end.
    """
    while prec <= max_prec:
        with ctx.workprec(prec):
            x = value(prec)
            terms = []
            ok = True
            while len(terms) < count:
                a = x.floor()
                if not a.is_exact():
                    ok = False
                    break
                ai = int(a.unique_fmpz())
                terms.append(ai)
                frac = x - ai
                if frac.is_zero():
                    break  # x was rational and the expansion has ended
                if frac.contains(0):
                    ok = False
                    break
                x = 1 / frac
            if ok:
                return terms
        prec *= 2
    raise PrecisionExhausted("continued fraction expansion did not resolve")


def convergents(terms: list[int]) -> Iterator[tuple[int, int]]:
    """Successive convergents (p_k, q_k) of [a0; a1, a2, ...]."""
    p0, q0, p1, q1 = 1, 0, terms[0], 1
    yield p1, q1
    for a in terms[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1
