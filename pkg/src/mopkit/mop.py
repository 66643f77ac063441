"""Construction of type II and type I multiple orthogonal polynomials.

Both constructions reduce to square moment systems: the type II polynomial of
multi-index n is the monic degree-|n| solution of the orthogonality rows, and
the type I vector solves the dual system with |n|-1 orthogonality rows plus
one normalisation row.  Exact mode solves fraction-free; float mode uses
partially pivoted LU at the configured precision.  Singular systems raise
NotNormalIndexError and are never silently regularised.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from . import linalg
from .errors import BoundsError, NotNormalIndexError, ValidationError
from .measures import CLOSED_FORM_RATIONAL, MeasureSystem
from .paths import Path
from .polys import Poly
from .scalars import EXACT, FLOAT, Scalar, as_mpf, default_precision, workprec


@dataclass(frozen=True)
class TypeIIPoly:
    poly: Poly
    index: Tuple[int, ...]


@dataclass(frozen=True)
class TypeIVector:
    polys: Tuple[Poly, ...]
    index: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class QFunction:
    """Pointwise weighted combination of a type I vector: sum A_j(y) w_j(y)."""

    type1: TypeIVector
    system: MeasureSystem

    def value_flagged(self, y):
        weights, outside = self.system.weights_at(y)
        total = Fraction(0)
        for poly, w in zip(self.type1.polys, weights):
            if w != 0 and not poly.is_zero:
                total += poly(y) * w
        return total, outside

    def __call__(self, y):
        return self.value_flagged(y)[0]


def _validate_index(system: MeasureSystem, n) -> Tuple[int, ...]:
    n = tuple(int(v) for v in n)
    if len(n) != system.r:
        raise ValidationError(f"index {n} has {len(n)} entries, system has r={system.r}")
    if any(v < 0 for v in n):
        raise ValidationError(f"index {n} has negative entries")
    return n


def _moments_for(system: MeasureSystem, mode: str, prec: int):
    if mode == EXACT:
        for c in system.components:
            if c.moment_kind != CLOSED_FORM_RATIONAL:
                raise ValidationError(
                    f"component {c.label!r} has {c.moment_kind} moments; exact mode needs closed-form rationals"
                )
        return lambda j, k: Fraction(system.moment(j, k))
    return lambda j, k: as_mpf(system.moment(j, k), prec)


def type2(system: MeasureSystem, n, mode: str = EXACT, precision: Optional[int] = None) -> TypeIIPoly:
    """Monic type II polynomial: degree |n|, orthogonal to x^k against the
    j-th measure for k < n_j."""
    n = _validate_index(system, n)
    prec = precision if precision is not None else default_precision()
    mom = _moments_for(system, mode, prec)
    size = sum(n)
    if size == 0:
        return TypeIIPoly(Poly.one(), n)
    with workprec(prec):
        rows, rhs = [], []
        for j in range(1, system.r + 1):
            for k in range(n[j - 1]):
                rows.append([mom(j, k + m) for m in range(size)])
                rhs.append(-mom(j, k + size))
        try:
            if mode == EXACT:
                coeffs = linalg.solve_exact(rows, rhs)
            else:
                coeffs = linalg.solve_mpf(rows, rhs)
        except linalg.SingularMatrixError as exc:
            raise NotNormalIndexError(n, str(exc)) from exc
        return TypeIIPoly(Poly.from_coeffs(list(coeffs) + [Fraction(1)]), n)


def type1(system: MeasureSystem, n, mode: str = EXACT, precision: Optional[int] = None) -> TypeIVector:
    """Type I vector: deg A_j <= n_j - 1, orthogonal to x^k for k <= |n|-2,
    normalised against x^(|n|-1)."""
    n = _validate_index(system, n)
    size = sum(n)
    if size < 1:
        raise ValidationError(f"type I needs |n| >= 1, got {n}")
    prec = precision if precision is not None else default_precision()
    mom = _moments_for(system, mode, prec)
    layout = [(j, i) for j in range(1, system.r + 1) for i in range(n[j - 1])]
    with workprec(prec):
        rows = []
        rhs = []
        for k in range(size):
            rows.append([mom(j, k + i) for j, i in layout])
            rhs.append(Fraction(1) if k == size - 1 else Fraction(0))
        try:
            if mode == EXACT:
                sol = linalg.solve_exact(rows, rhs)
            else:
                sol = linalg.solve_mpf(rows, rhs)
        except linalg.SingularMatrixError as exc:
            raise NotNormalIndexError(n, str(exc)) from exc
    polys = []
    pos = 0
    for j in range(1, system.r + 1):
        cnt = n[j - 1]
        polys.append(Poly.from_coeffs(sol[pos : pos + cnt]))
        pos += cnt
    return TypeIVector(tuple(polys), n)


class BiorthogonalFamily:
    """Polynomial sequences p_l and q_l along a fixed multi-index path.

    Memoises type II / type I solves (also off-path, for the recurrence
    extraction) and the moment pairings; the pairing of any polynomial with
    q_l reduces to moment sums, so exact mode keeps it rational.
    """

    def __init__(self, system: MeasureSystem, path: Path, mode: str = EXACT,
                 precision: Optional[int] = None):
        if mode not in (EXACT, FLOAT):
            raise ValidationError(f"unknown mode {mode!r}")
        if path.r != system.r:
            raise ValidationError(f"path has r={path.r}, system has r={system.r}")
        self.system = system
        self.path = path
        self.mode = mode
        self.precision = precision if precision is not None else default_precision()
        self._indices = path.indices()
        self._type2 = {}
        self._type1 = {}
        self._qmom = {}

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    @property
    def length(self) -> int:
        return self.path.length

    def index(self, ell: int) -> Tuple[int, ...]:
        if not 0 <= ell <= self.length:
            raise BoundsError(f"path of length {self.length} has no index n_{ell}")
        return self._indices[ell]

    def type2_at(self, n) -> TypeIIPoly:
        n = tuple(n)
        if n not in self._type2:
            self._type2[n] = type2(self.system, n, mode=self.mode, precision=self.precision)
        return self._type2[n]

    def type1_at(self, n) -> TypeIVector:
        n = tuple(n)
        if n not in self._type1:
            self._type1[n] = type1(self.system, n, mode=self.mode, precision=self.precision)
        return self._type1[n]

    def p(self, ell: int) -> Poly:
        return self.type2_at(self.index(ell)).poly

    def q_type1(self, ell: int) -> TypeIVector:
        if ell + 1 > self.length:
            raise BoundsError(f"q_{ell} needs path index n_{ell + 1}; path length is {self.length}")
        return self.type1_at(self.index(ell + 1))

    def q_function(self, ell: int) -> QFunction:
        return QFunction(self.q_type1(ell), self.system)

    def p_value(self, ell: int, x) -> Scalar:
        if self.exact:
            return self.p(ell)(x)
        with workprec(self.precision):
            return self.p(ell)(as_mpf(x))

    def q_value(self, ell: int, y) -> Scalar:
        return self.q_value_flagged(ell, y)[0]

    def q_value_flagged(self, ell: int, y):
        qf = self.q_function(ell)
        if self.exact:
            return qf.value_flagged(y)
        with workprec(self.precision):
            return qf.value_flagged(as_mpf(y))

    def _q_moment_vector(self, ell: int, upto: int):
        """u_k = integral of x^k against the q_l combination, k <= upto."""
        vec = self._qmom.setdefault(ell, [])
        if len(vec) > upto:
            return vec
        a = self.q_type1(ell)
        mom = _moments_for(self.system, self.mode, self.precision)
        with workprec(self.precision):
            for k in range(len(vec), upto + 1):
                total = Fraction(0)
                for j, poly in enumerate(a.polys, start=1):
                    for i, c in enumerate(poly.coeffs):
                        if c != 0:
                            total += c * mom(j, k + i)
                vec.append(total)
        return vec

    def pair_poly_q(self, g: Poly, ell: int) -> Scalar:
        """Scalar product of a polynomial with q_l in L2 of the reference."""
        if g.is_zero:
            return Fraction(0)
        u = self._q_moment_vector(ell, g.degree)
        with workprec(self.precision):
            total = Fraction(0)
            for k, c in enumerate(g.coeffs):
                if c != 0:
                    total += c * u[k]
            return total

    def pair_pq(self, ell: int, ellp: int) -> Scalar:
        """Scalar product of p_ell with q_ellp."""
        return self.pair_poly_q(self.p(ell), ellp)


def biorthogonality_matrix(family: BiorthogonalFamily, N: int):
    """Gram matrix of the first N pairs; the identity for perfect systems."""
    if N > family.length:
        raise BoundsError(f"N={N} exceeds the path length {family.length}")
    return [[family.pair_pq(ell, ellp) for ellp in range(N)] for ell in range(N)]


@dataclass(frozen=True)
class PerfectnessReport:
    max_size: int
    checked: int
    failures: Tuple[Tuple[Tuple[int, ...], str], ...]

    @property
    def all_normal(self) -> bool:
        return not self.failures


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def perfectness_scan(system: MeasureSystem, max_size: int, mode: str = EXACT,
                     precision: Optional[int] = None) -> PerfectnessReport:
    """Try both constructions at every multi-index of size <= max_size."""
    failures = []
    checked = 0
    for size in range(max_size + 1):
        for n in _compositions(size, system.r):
            checked += 1
            try:
                type2(system, n, mode=mode, precision=precision)
                if size >= 1:
                    type1(system, n, mode=mode, precision=precision)
            except NotNormalIndexError as exc:
                failures.append((n, str(exc)))
    return PerfectnessReport(max_size=max_size, checked=checked, failures=tuple(failures))
