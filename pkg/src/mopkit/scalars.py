"""Scalar arithmetic: exact rationals and arbitrary-precision reals.

Two scalar kinds flow through the whole library:

* exact rationals, represented by ``fractions.Fraction`` (or plain ``int``),
  whose arithmetic is error-free;
* big reals, represented by ``mpmath.mpf``, correctly rounded at the ambient
  mpmath precision.

Mixing the two promotes the rational operand to an ``mpf`` at the ambient
precision, which is exactly what mpmath does natively, so no wrapper class is
needed.  The helpers here handle conversions, precision configuration and the
environment override ``MOPKIT_PRECISION_BITS``.
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Union

import mpmath
from mpmath import mp

Scalar = Union[int, Fraction, mpmath.mpf]

DEFAULT_PRECISION_BITS = 256

EXACT = "exact"
FLOAT = "mpf"
MODES = (EXACT, FLOAT)


def default_precision() -> int:
    """Precision in bits, honouring the MOPKIT_PRECISION_BITS override."""
    raw = os.environ.get("MOPKIT_PRECISION_BITS")
    if raw is None:
        return DEFAULT_PRECISION_BITS
    try:
        bits = int(raw)
    except ValueError as exc:
        raise ValueError(f"MOPKIT_PRECISION_BITS must be an integer, got {raw!r}") from exc
    if bits < 16:
        raise ValueError(f"MOPKIT_PRECISION_BITS too small: {bits}")
    return bits


def workprec(bits: int | None):
    """Context manager setting the mpmath working precision."""
    return mp.workprec(bits if bits is not None else default_precision())


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def kind(x) -> str:
    """'exact-rational' or 'big-real' tag of a scalar."""
    if is_exact(x):
        return "exact-rational"
    if isinstance(x, mpmath.mpf):
        return "big-real"
    raise TypeError(f"not a scalar: {type(x)!r}")


def as_fraction(x) -> Fraction:
    """Exact conversion to Fraction; mpf values convert via their dyadic form."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, mpmath.mpf):
        sign, man, exp, _ = x._mpf_
        if man == 0 and exp != 0:
            raise ValueError(f"cannot convert non-finite value {x} to Fraction")
        frac = Fraction(int(man), 1) * Fraction(2) ** exp
        return -frac if sign else frac
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x)!r} to Fraction")


def as_mpf(x, prec: int | None = None) -> mpmath.mpf:
    """Round a scalar to mpf at `prec` bits (ambient precision if omitted)."""
    if prec is None:
        return mpmath.mpmathify(x)
    with mp.workprec(prec):
        return +mpmath.mpmathify(x)


def as_float(x) -> float:
    return float(x)


def convert(x, mode: str, prec: int | None = None) -> Scalar:
    """Coerce to the arithmetic of `mode` ('exact' keeps rationals exact)."""
    if mode == EXACT:
        return as_fraction(x)
    if mode == FLOAT:
        return as_mpf(x, prec)
    raise ValueError(f"unknown mode {mode!r}")
