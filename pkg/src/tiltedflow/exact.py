"""Exact arithmetic helpers for lattice geometry.

All combinatorial predicates in this package reduce to sign tests of
numbers of the form a + b*sqrt(R) with a, b rational and R a fixed
positive integer (R is the squared norm of a primitive direction
vector).  This module provides that quadratic-field arithmetic, with
exact signs, comparisons and floors, so no geometric decision is ever
made from floats.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]


def isqrt_floor(n: int) -> int:
    return math.isqrt(n)


def sign(x: Fraction) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


class Quad:
    """Exact number a + b*sqrt(R); a, b rational, R a positive integer.

    Numbers with the same R form a field, which is all we need: every
    predicate of one tilted cylinder lives over a single radical.
    """

    __slots__ = ("a", "b", "R")

    def __init__(self, a: Rational, b: Rational = 0, R: int = 1):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.R = int(R)
        if self.R <= 0:
            raise ValueError("R must be a positive integer")

    # -- construction -------------------------------------------------
    @staticmethod
    def of(a: Rational, R: int) -> "Quad":
        return Quad(a, 0, R)

    @staticmethod
    def root(R: int, coeff: Rational = 1) -> "Quad":
        """coeff * sqrt(R)."""
        return Quad(0, coeff, R)

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other) -> "Quad":
        if isinstance(other, Quad):
            if other.R != self.R and other.b != 0 and self.b != 0:
                raise ValueError("mixed radicals %d and %d" % (self.R, other.R))
            R = self.R if self.b != 0 or other.b == 0 else other.R
            return Quad(other.a, other.b, R)
        return Quad(other, 0, self.R)

    def __add__(self, other) -> "Quad":
        o = self._coerce(other)
        R = self.R if self.b != 0 or o.b == 0 else o.R
        return Quad(self.a + o.a, self.b + o.b, R)

    __radd__ = __add__

    def __sub__(self, other) -> "Quad":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Quad":
        return self._coerce(other) + (-self)

    def __neg__(self) -> "Quad":
        return Quad(-self.a, -self.b, self.R)

    def __mul__(self, other) -> "Quad":
        o = self._coerce(other)
        R = self.R if self.b != 0 or o.b == 0 else o.R
        # (a1 + b1 s)(a2 + b2 s) = a1 a2 + b1 b2 R + (a1 b2 + a2 b1) s
        return Quad(
            self.a * o.a + self.b * o.b * R,
            self.a * o.b + self.b * o.a,
            R,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Quad":
        o = self._coerce(other)
        # multiply by conjugate
        denom = o.a * o.a - o.b * o.b * o.R
        if denom == 0:
            raise ZeroDivisionError("division by zero Quad")
        conj = Quad(o.a, -o.b, self.R if self.b != 0 else o.R)
        num = self * conj
        return Quad(num.a / denom, num.b / denom, num.R)

    # -- order ----------------------------------------------------------
    def sign(self) -> int:
        a, b = self.a, self.b
        if b == 0:
            return sign(a)
        if a == 0:
            return sign(b)
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # opposite signs: compare a^2 with b^2 R
        d = a * a - b * b * self.R
        if d == 0:
            return 0
        # if a > 0 > b: positive iff a^2 > b^2 R
        return sign(d) if a > 0 else -sign(d)

    def __lt__(self, other) -> bool:
        return (self - other).sign() < 0

    def __le__(self, other) -> bool:
        return (self - other).sign() <= 0

    def __gt__(self, other) -> bool:
        return (self - other).sign() > 0

    def __ge__(self, other) -> bool:
        return (self - other).sign() >= 0

    def __eq__(self, other) -> bool:
        try:
            return (self - other).sign() == 0
        except (ValueError, TypeError):
            return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.R))

    # -- conversions ------------------------------------------------------
    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(self.R)

    def floor(self) -> int:
        """Exact floor."""
        m = math.floor(float(self))
        # float estimate can be off near integers; fix up exactly
        while (self - m).sign() < 0:
            m -= 1
        while (self - (m + 1)).sign() >= 0:
            m += 1
        return m

    def round_half_down(self) -> int:
        """Nearest integer, ties toward -infinity."""
        # round(x) with ties down = ceil(x - 1/2) = -floor(1/2 - x)
        return -(Quad(Fraction(1, 2), 0, self.R) - self).floor()

    def __repr__(self):
        if self.b == 0:
            return f"Quad({self.a})"
        return f"Quad({self.a} + {self.b}*sqrt({self.R}))"


def rational_between(lo: Quad, hi: Quad) -> Fraction:
    """Some rational strictly between lo < hi, found by bisection."""
    if not lo < hi:
        raise ValueError("empty interval")
    flo, fhi = float(lo), float(hi)
    guess = Fraction((flo + fhi) / 2.0).limit_denominator(1 << 20)
    if lo < guess < hi:
        return guess
    # exact bisection fallback: floor-based interval walk
    a = Fraction(lo.floor())
    b = Fraction(hi.floor() + 1)
    for _ in range(512):
        mid = (a + b) / 2
        if lo < mid < hi:
            return mid
        if not (lo < mid):
            a = mid
        else:
            b = mid
    raise RuntimeError("rational_between failed to converge")


def dot(u, v) -> Fraction:
    return Fraction(u[0]) * v[0] + Fraction(u[1]) * v[1]


def cross(u, v) -> Fraction:
    return Fraction(u[0]) * v[1] - Fraction(u[1]) * v[0]
