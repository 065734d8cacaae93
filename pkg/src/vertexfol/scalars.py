"""Exact rational scalars.

All arithmetic in the package goes through ``Q``, which is gmpy2's ``mpq``:
always reduced, positive denominator, zero stored as 0/1.
"""

from __future__ import annotations

import re
from math import comb

from gmpy2 import mpq

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)

_RATIONAL = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")


def to_q(value) -> mpq:
    """Coerce ints, strings like '3/4', Fractions and mpq to ``Q``."""
    if isinstance(value, str):
        m = _RATIONAL.match(value)
        if not m:
            raise ValueError(f"not a rational literal: {value!r}")
        num = int(m.group(1))
        den = int(m.group(2)) if m.group(2) else 1
        return mpq(num, den)
    if isinstance(value, float):
        raise TypeError("floats are not exact scalars")
    return mpq(value)


def q_str(value) -> str:
    return str(mpq(value))


def binom(n: int, k: int) -> int:
    """Generalized binomial coefficient for integer n (possibly negative), k >= 0."""
    if k < 0:
        return 0
    if n >= 0:
        return comb(n, k) if k <= n else 0
    # C(n, k) = (-1)^k C(k - n - 1, k)
    return (-1) ** k * comb(k - n - 1, k)


def factorial(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


class GaussQ:
    """Gaussian rational re + i*im with exact parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = to_q(re) if not isinstance(re, mpq) else re
        self.im = to_q(im) if not isinstance(im, mpq) else im

    @staticmethod
    def of(x) -> "GaussQ":
        if isinstance(x, GaussQ):
            return x
        if isinstance(x, tuple):
            return GaussQ(x[0], x[1])
        return GaussQ(x, 0)

    def __add__(self, other):
        o = GaussQ.of(other)
        return GaussQ(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __sub__(self, other):
        o = GaussQ.of(other)
        return GaussQ(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussQ.of(other) - self

    def __mul__(self, other):
        o = GaussQ.of(other)
        return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def norm2(self) -> mpq:
        return self.re * self.re + self.im * self.im

    def conj(self) -> "GaussQ":
        return GaussQ(self.re, -self.im)

    def __truediv__(self, other):
        o = GaussQ.of(other)
        n = o.norm2()
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        p = self * o.conj()
        return GaussQ(p.re / n, p.im / n)

    def __rtruediv__(self, other):
        return GaussQ.of(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return GaussQ(1) / (self ** (-k))
        out = GaussQ(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        try:
            o = GaussQ.of(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussQ({self.re}, {self.im})"
