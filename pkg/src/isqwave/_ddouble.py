"""Compensated (double-double) arithmetic on (hi, lo) pairs.

Operands are floats or numpy arrays; every function works elementwise on
either. A pair represents hi + lo with |lo| <= ulp(hi)/2, giving roughly
32 significant digits. Only the handful of operations needed by the Bessel
series is provided.
"""

from __future__ import annotations

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def two_prod(a, b):
    p = a * b
    ca = _SPLITTER * a
    ahi = ca - (ca - a)
    alo = a - ahi
    cb = _SPLITTER * b
    bhi = cb - (cb - b)
    blo = b - bhi
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


def dd_add(x, y):
    s, e = two_sum(x[0], y[0])
    e = e + x[1] + y[1]
    hi, lo = two_sum(s, e)
    return hi, lo


def dd_mul(x, y):
    p, e = two_prod(x[0], y[0])
    e = e + x[0] * y[1] + x[1] * y[0]
    hi, lo = two_sum(p, e)
    return hi, lo


def dd_mul_d(x, d):
    p, e = two_prod(x[0], d)
    e = e + x[1] * d
    hi, lo = two_sum(p, e)
    return hi, lo


def dd_div(x, y):
    # two Newton correction passes on the double quotient
    q1 = x[0] / y[0]
    r = dd_add(x, dd_mul_d(y, -q1))
    q2 = r[0] / y[0]
    r = dd_add(r, dd_mul_d(y, -q2))
    q3 = r[0] / y[0]
    s, e = two_sum(q1, q2)
    hi, lo = two_sum(s, e + q3)
    return hi, lo
