"""Christoffel-Darboux kernel, positivity diagnostics and the Nevai operator.

The kernel K_n(x, y) sums p_j(x) q_j(y) over j < n and is non-symmetric for
r > 1.  Every L2 pairing of a polynomial against a q-function reduces to
moment sums, so the reproducing identity can be checked without quadrature;
the Nevai operator is evaluated through the multiplication matrix, again
quadrature-free, with an independent quadrature oracle kept alongside.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import mpmath

from . import measures as _measures
from .errors import BoundsError, MopkitError, ValidationError
from .hessenberg import HessenbergMatrix
from .mop import BiorthogonalFamily
from .paths import stepline
from .scalars import EXACT, Scalar, as_mpf, workprec


class CDKernel:
    """Kernel of order n over a biorthogonal family; caches the per-point
    vectors p_j(x) and q_j(y) that all downstream formulas consume."""

    def __init__(self, family: BiorthogonalFamily, n: int):
        if n < 1:
            raise ValidationError(f"kernel order must be >= 1, got {n}")
        if n > family.length:
            raise BoundsError(f"kernel order {n} needs path length >= {n}, got {family.length}")
        self.family = family
        self.n = n
        cache = getattr(family, "_kernel_value_cache", None)
        if cache is None:
            cache = {"p": {}, "q": {}}
            family._kernel_value_cache = cache
        self._cache = cache

    def p_values(self, x):
        memo = self._cache["p"]
        key = x
        vals = memo.get(key)
        if vals is None or len(vals) < self.n:
            vals = [self.family.p_value(ell, x) for ell in range(self.n)]
            memo[key] = vals
        return vals[: self.n]

    def q_values_flagged(self, y):
        memo = self._cache["q"]
        key = y
        entry = memo.get(key)
        if entry is None or len(entry[0]) < self.n:
            vals = []
            outside = True
            for ell in range(self.n):
                v, out = self.family.q_value_flagged(ell, y)
                vals.append(v)
                outside = outside and out
            entry = (vals, outside)
            memo[key] = entry
        return entry[0][: self.n], entry[1]

    def eval_flagged(self, x, y):
        pv = self.p_values(x)
        qv, outside = self.q_values_flagged(y)
        with workprec(self.family.precision):
            total = Fraction(0)
            for a, b in zip(pv, qv):
                total += a * b
        return total, outside

    def eval(self, x, y) -> Scalar:
        return self.eval_flagged(x, y)[0]

    def diagonal(self, x) -> Scalar:
        return self.eval(x, x)


def kernel_eval(K: CDKernel, x, y) -> Scalar:
    """K_n(x, y); points outside every support use the zero weight extension."""
    return K.eval(x, y)


def reproducing_check(K: CDKernel, x) -> Scalar:
    """Residual of integrating K_n(x, .) K_n(., x) against the measure,
    reduced algebraically to pairings: identically zero in exact mode."""
    fam = K.family
    n = K.n
    deltas = []
    for ell in range(n):
        for ellp in range(n):
            e = fam.pair_pq(ellp, ell) - (1 if ell == ellp else 0)
            if e != 0:
                deltas.append((ell, ellp, e))
    if not deltas:
        return Fraction(0)
    pv = K.p_values(x)
    qv, _ = K.q_values_flagged(x)
    with workprec(fam.precision):
        total = Fraction(0)
        for ell, ellp, e in deltas:
            total += pv[ell] * qv[ellp] * e
        return total


@dataclass(frozen=True)
class PositivityReport:
    n: int
    count: int
    min_value: Optional[Scalar]
    min_at: Optional[Scalar]
    negatives: Tuple[Tuple[Scalar, Scalar], ...]

    @property
    def all_nonnegative(self) -> bool:
        return not self.negatives


def positivity_scan(K: CDKernel, grid) -> PositivityReport:
    """Minimum of the diagonal over the grid, flagging negative values."""
    min_value = None
    min_at = None
    negatives = []
    count = 0
    for x in grid:
        v = K.diagonal(x)
        count += 1
        if min_value is None or v < min_value:
            min_value, min_at = v, x
        if v < 0:
            negatives.append((x, v))
    return PositivityReport(
        n=K.n, count=count, min_value=min_value, min_at=min_at, negatives=tuple(negatives)
    )


@dataclass(frozen=True)
class DetposReport:
    n: int
    points: Tuple[Scalar, ...]
    determinants: Tuple[Scalar, ...]

    @property
    def full_determinant(self) -> Scalar:
        return self.determinants[-1]

    @property
    def min_determinant(self) -> Scalar:
        return min(self.determinants)


EXACT_DET_LIMIT = 12


def detpos_check(K: CDKernel, points) -> DetposReport:
    """Determinants of the kernel cross matrices at an increasing tuple.

    Returns the determinant of every leading block (sizes 1 .. len(points)).
    Exact determinants are used for blocks up to size 12 in exact mode;
    beyond that the evaluation switches to floating arithmetic.
    """
    pts = list(points)
    if len(pts) > K.n:
        raise ValidationError(f"tuple of length {len(pts)} exceeds kernel order {K.n}")
    for a, b in zip(pts, pts[1:]):
        if not a < b:
            raise ValidationError(f"points must be strictly increasing, got {a} then {b}")
    for x in pts:
        if not K.family.system.in_support(x):
            raise ValidationError(f"point {x} is outside the support")
    m = len(pts)
    from . import linalg

    matrix = [[K.eval(xi, xj) for xj in pts] for xi in pts]
    dets = []
    with workprec(K.family.precision):
        for size in range(1, m + 1):
            block = [row[:size] for row in matrix[:size]]
            if K.family.exact and size <= EXACT_DET_LIMIT:
                dets.append(linalg.det_exact(block))
            else:
                dets.append(linalg.det_mpf(block))
    return DetposReport(n=K.n, points=tuple(pts), determinants=tuple(dets))


def nevai_G(J: HessenbergMatrix, K: CDKernel, x, k: int) -> Scalar:
    """Kernel-squared average of y^k at x, contracted through the matrix:
    no quadrature involved."""
    if k < 0:
        raise ValidationError(f"power must be >= 0, got {k}")
    n = K.n
    if k > 0 and J.size < n + k:
        raise BoundsError(f"need matrix size >= {n + k}, have {J.size}")
    with workprec(K.family.precision):
        pv = K.p_values(x)
        qv, _ = K.q_values_flagged(x)
        kxx = Fraction(0)
        for a, b in zip(pv, qv):
            kxx += a * b
        if kxx == 0:
            raise MopkitError(f"K_n(x, x) vanishes at x={x}; the operator is undefined")
        width = n + k
        vec = list(pv) + [Fraction(0)] * k
        for _ in range(k):
            nxt = [Fraction(0)] * width
            for i in range(width):
                acc = Fraction(0)
                for j in range(min(i + 1, width - 1) + 1):
                    e = J.entry(i, j)
                    if e != 0 and vec[j] != 0:
                        acc += e * vec[j]
                nxt[i] = acc
            vec = nxt
        total = Fraction(0)
        for i in range(n):
            total += qv[i] * vec[i]
        return total / kxx


def nevai_G_quadrature(K: CDKernel, x, k: int, tol=None) -> Scalar:
    """Quadrature route for the same average; the independent cross-check."""
    fam = K.family
    with workprec(fam.precision):
        xm = as_mpf(x) if not fam.exact else x

        def integrand(y):
            return K.eval(xm, y) * (y**k) * K.eval(y, xm)

        val, _err = _measures.integrate(integrand, fam.system, tol=tol)
        kxx = K.diagonal(xm)
        if kxx == 0:
            raise MopkitError(f"K_n(x, x) vanishes at x={x}")
        return val / kxx


@dataclass(frozen=True)
class NevaiRatioTable:
    x: Scalar
    rows: Tuple[Tuple[int, int, int, Scalar], ...]
    max_ratio_by_n: Tuple[Tuple[int, Scalar], ...]


def nevai_hypothesis_c(family: BiorthogonalFamily, x, n_values, N: int) -> NevaiRatioTable:
    """Ratios q_l(x) p_l'(x) / K_n(x, x) for l' in [n-N, n) and l in [n, n+N]
    across the given n values, with the per-n maximum as a decay summary."""
    rows = []
    summary = []
    for n in n_values:
        K = CDKernel(family, n)
        with workprec(family.precision):
            kxx = K.diagonal(x)
            if kxx == 0:
                raise MopkitError(f"K_n(x, x) vanishes at x={x}, n={n}")
            worst = None
            for ell in range(n, n + N + 1):
                qv = family.q_value(ell, x)
                for ellp in range(max(0, n - N), n):
                    ratio = qv * family.p_value(ellp, x) / kxx
                    rows.append((n, ell, ellp, ratio))
                    if worst is None or abs(ratio) > worst:
                        worst = abs(ratio)
            summary.append((n, worst if worst is not None else Fraction(0)))
    return NevaiRatioTable(x=x, rows=tuple(rows), max_ratio_by_n=tuple(summary))


@dataclass(frozen=True)
class SignScanReport:
    n: int
    x: Scalar
    count: int
    positive: int
    negative: int
    near_zero: int
    min_value: Optional[Scalar]
    min_at: Optional[Scalar]
    negative_samples: Tuple[Tuple[Scalar, Scalar], ...]

    @property
    def has_strict_negative(self) -> bool:
        return self.negative > 0


def nevai_product_sign_scan(K: CDKernel, x, grid, threshold=0) -> SignScanReport:
    """Sign census of y -> K_n(x, y) K_n(y, x) over the grid."""
    pos = neg = zero = 0
    min_value = None
    min_at = None
    samples = []
    count = 0
    with workprec(K.family.precision):
        for y in grid:
            v = K.eval(x, y) * K.eval(y, x)
            count += 1
            if min_value is None or v < min_value:
                min_value, min_at = v, y
            if v > threshold:
                pos += 1
            elif v < -threshold:
                neg += 1
                if len(samples) < 20:
                    samples.append((y, v))
            else:
                zero += 1
    return SignScanReport(
        n=K.n, x=x, count=count, positive=pos, negative=neg, near_zero=zero,
        min_value=min_value, min_at=min_at, negative_samples=tuple(samples),
    )


def nevai_abs_ratio(K: CDKernel, x, tol=None) -> Scalar:
    """Absolute kernel-product mass at x divided by the diagonal; equals one
    whenever the product keeps a constant sign."""
    fam = K.family
    with workprec(fam.precision):
        xm = as_mpf(x) if not fam.exact else x

        def integrand(y):
            return abs(K.eval(xm, y) * K.eval(y, xm))

        val, _ = _measures.integrate(integrand, fam.system, tol=tol)
        return val / K.diagonal(xm)


@dataclass(frozen=True)
class AtomLimitReport:
    x0: Scalar
    atom_mass: Fraction
    table: Tuple[Tuple[int, Scalar], ...]

    @property
    def target(self) -> Fraction:
        return 1 / self.atom_mass

    @property
    def final_value(self) -> Scalar:
        return self.table[-1][1]


def atom_limit_experiment(system, x0, n_values, mode: str = EXACT,
                          precision: Optional[int] = None) -> AtomLimitReport:
    """Diagonal kernel values at an isolated atom across orders n.

    Only r = 1 systems carry atoms; the diagonal converges to the reciprocal
    atom mass when the kernel-average operator localises at the point.
    """
    if system.r != 1:
        raise ValidationError("atom experiments require r = 1")
    x0 = _measures.rational(x0)
    mass = None
    for loc, m in system.reference.atoms:
        if loc == x0:
            mass = m
            break
    if mass is None:
        raise ValidationError(f"{x0} is not an atom of the measure")
    for iv, _dens in system.reference.pieces:
        if iv.contains(x0):
            raise ValidationError(f"atom {x0} is not isolated: it lies inside {iv}")
    n_values = sorted(set(int(n) for n in n_values))
    top = n_values[-1]
    family = BiorthogonalFamily(system, stepline(1, top + 1), mode=mode, precision=precision)
    table = []
    for n in n_values:
        K = CDKernel(family, n)
        table.append((n, K.diagonal(x0)))
    return AtomLimitReport(x0=x0, atom_mass=mass, table=tuple(table))
