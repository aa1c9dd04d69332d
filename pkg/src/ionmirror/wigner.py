"""Wigner 3-j and 6-j symbols from the Racah formulas.

Arguments may be integers or half-integers (int, float or Fraction). All
factorial arithmetic is done on exact integers; only the final square root
is taken in floating point.
"""
from __future__ import annotations

from fractions import Fraction
from math import factorial, sqrt


def _twice(x) -> int:
    t = Fraction(x) * 2
    if t.denominator != 1:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(t)


def _half(two_x: int) -> int:
    # two_x is guaranteed even by the triangle/parity checks of the caller
    return two_x // 2


def _triangle(ta: int, tb: int, tc: int) -> bool:
    return (
        abs(ta - tb) <= tc <= ta + tb
        and (ta + tb + tc) % 2 == 0
    )


def _delta(ta: int, tb: int, tc: int) -> Fraction:
    return Fraction(
        factorial(_half(ta + tb - tc))
        * factorial(_half(ta - tb + tc))
        * factorial(_half(-ta + tb + tc)),
        factorial(_half(ta + tb + tc) + 1),
    )


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol (j1 j2 j3; m1 m2 m3)."""
    tj1, tj2, tj3 = _twice(j1), _twice(j2), _twice(j3)
    tm1, tm2, tm3 = _twice(m1), _twice(m2), _twice(m3)
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if not _triangle(tj1, tj2, tj3):
        return 0.0
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if abs(tm) > tj or (tj + tm) % 2:
            return 0.0

    pre = _delta(tj1, tj2, tj3)
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        pre *= factorial(_half(tj + tm)) * factorial(_half(tj - tm))

    # summation bounds from nonnegativity of all factorial arguments
    a1 = _half(tj3 - tj2 + tm1)
    a2 = _half(tj3 - tj1 - tm2)
    b1 = _half(tj1 + tj2 - tj3)
    b2 = _half(tj1 - tm1)
    b3 = _half(tj2 + tm2)
    kmin = max(0, -a1, -a2)
    kmax = min(b1, b2, b3)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            factorial(k)
            * factorial(a1 + k)
            * factorial(a2 + k)
            * factorial(b1 - k)
            * factorial(b2 - k)
            * factorial(b3 - k)
        )
        total += Fraction((-1) ** k, den)
    phase = -1 if _half(tj1 - tj2 - tm3) % 2 else 1
    return phase * float(total) * sqrt(pre)


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}."""
    tj = [_twice(x) for x in (j1, j2, j3, j4, j5, j6)]
    t1, t2, t3, t4, t5, t6 = tj
    triads = ((t1, t2, t3), (t1, t5, t6), (t4, t2, t6), (t4, t5, t3))
    if not all(_triangle(*t) for t in triads):
        return 0.0

    pre = Fraction(1)
    for t in triads:
        pre *= _delta(*t)

    sums = [_half(a + b + c) for a, b, c in triads]
    tops = [
        _half(t1 + t2 + t4 + t5),
        _half(t2 + t3 + t5 + t6),
        _half(t3 + t1 + t6 + t4),
    ]
    total = Fraction(0)
    for t in range(max(sums), min(tops) + 1):
        den = 1
        for s in sums:
            den *= factorial(t - s)
        for u in tops:
            den *= factorial(u - t)
        total += Fraction((-1) ** t * factorial(t + 1), den)
    return float(total) * sqrt(pre)
