"""Dense univariate polynomials in the monomial basis.

Coefficients may be exact rationals or mpf reals; all arithmetic routes
through the scalar types, so a polynomial built from Fractions stays exact.
Index ``i`` of the coefficient sequence is the coefficient of ``x**i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence, Tuple

from .scalars import Scalar, as_fraction, is_exact


def _trim(coeffs):
    last = len(coeffs)
    while last > 0 and coeffs[last - 1] == 0:
        last -= 1
    return tuple(coeffs[:last])


@dataclass(frozen=True)
class Poly:
    """Polynomial with coefficients in ascending powers."""

    coeffs: Tuple[Scalar, ...]

    @staticmethod
    def from_coeffs(coeffs: Sequence[Scalar]) -> "Poly":
        return Poly(_trim(tuple(coeffs)))

    @staticmethod
    def zero() -> "Poly":
        return Poly(())

    @staticmethod
    def one() -> "Poly":
        return Poly((Fraction(1),))

    @staticmethod
    def x() -> "Poly":
        return Poly((Fraction(0), Fraction(1)))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, i: int) -> Scalar:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    @property
    def leading(self) -> Scalar:
        if self.is_zero:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(_trim([self.coeff(i) + other.coeff(i) for i in range(n)]))

    def __sub__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(_trim([self.coeff(i) - other.coeff(i) for i in range(n)]))

    def __neg__(self) -> "Poly":
        return Poly(tuple(-c for c in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, Poly):
            if self.is_zero or other.is_zero:
                return Poly.zero()
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return Poly(_trim(out))
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        if c == 0:
            return Poly.zero()
        return Poly(tuple(a * c for a in self.coeffs))

    def shift_up(self, k: int = 1) -> "Poly":
        """Multiply by x**k."""
        if self.is_zero:
            return self
        return Poly((Fraction(0),) * k + self.coeffs)

    def derivative(self) -> "Poly":
        return Poly(_trim([i * c for i, c in enumerate(self.coeffs)][1:]))

    def monic(self) -> "Poly":
        lc = self.leading
        if lc == 1:
            return self
        return Poly(tuple(c / lc for c in self.coeffs))

    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.coeffs)


def divmod_poly(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Exact polynomial division; requires exact coefficients for exactness."""
    if den.is_zero:
        raise ZeroDivisionError("polynomial division by zero")
    rem = list(num.coeffs)
    dden = den.degree
    lc = den.leading
    quot = [Fraction(0)] * max(0, len(rem) - dden)
    for i in range(len(rem) - 1, dden - 1, -1):
        c = rem[i]
        if c == 0:
            continue
        q = c / lc
        quot[i - dden] = q
        for j, b in enumerate(den.coeffs):
            rem[i - dden + j] -= q * b
    return Poly(_trim(quot)), Poly(_trim(rem))


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Monic gcd over the rationals (Euclid with monic normalisation)."""
    a, b = p, q
    while not b.is_zero:
        _, r = divmod_poly(a, b)
        a, b = b, r
    if a.is_zero:
        return a
    return a.monic()


def squarefree_factors(p: Poly) -> list[tuple[Poly, int]]:
    """Yun decomposition [(g_i, i)] with p = lc * prod g_i**i, g_i squarefree."""
    if p.degree <= 0:
        return []
    p = p.monic()
    dp = p.derivative()
    a = poly_gcd(p, dp)
    b, _ = divmod_poly(p, a)
    c, _ = divmod_poly(dp, a)
    d = c - b.derivative()
    out = []
    i = 1
    while b.degree > 0:
        g = poly_gcd(b, d)
        if g.degree > 0:
            out.append((g, i))
        b, _ = divmod_poly(b, g)
        c, _ = divmod_poly(d, g)
        d = c - b.derivative()
        i += 1
    return out


def integer_scaled(p: Poly) -> list[int]:
    """Integer coefficient list sharing the roots of p (exact input only)."""
    coeffs = [as_fraction(c) for c in p.coeffs]
    den = 1
    for c in coeffs:
        den = den * c.denominator // gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return ints
