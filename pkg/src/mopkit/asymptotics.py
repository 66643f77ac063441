"""Zero counting versus the kernel diagonal: measures, gaps and diagnostics.

Roots are isolated by exact Sturm bisection on the integer-scaled polynomial,
so counts are certified; the moment route goes through windowed powers of the
multiplication matrix, with the root route kept as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import mpmath

from . import measures as _measures
from .errors import PrecisionFailure, ValidationError
from .hessenberg import HessenbergMatrix, power_window
from .kernel import CDKernel
from .mop import BiorthogonalFamily
from .polys import Poly, divmod_poly, poly_gcd, squarefree_factors
from .scalars import as_fraction, as_mpf, workprec


# ---------------------------------------------------------------------------
# certified real roots

def _sturm_chain(p: Poly):
    chain = [p, p.derivative()]
    while chain[-1].degree > 0:
        _, rem = divmod_poly(chain[-2], chain[-1])
        if rem.is_zero:
            break
        chain.append(-rem)
    return [c for c in chain if not c.is_zero]


def _variations(chain, x) -> int:
    signs = []
    for c in chain:
        v = c(x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _root_bound(p: Poly) -> Fraction:
    lead = abs(as_fraction(p.leading))
    worst = max(abs(as_fraction(c)) for c in p.coeffs[:-1]) if p.degree > 0 else Fraction(0)
    return 1 + worst / lead


@dataclass(frozen=True)
class RootList:
    roots: Tuple[mpmath.mpf, ...]
    intervals: Tuple[Tuple[Fraction, Fraction], ...]
    multiplicities: Tuple[int, ...]

    def __len__(self):
        return len(self.roots)


def _isolate_squarefree(g: Poly):
    """Disjoint rational intervals (lo, hi] each holding one root of g."""
    chain = _sturm_chain(g)
    bound = _root_bound(g)
    out = []

    def recurse(lo, hi, vlo, vhi):
        count = vlo - vhi
        if count == 0:
            return
        if count == 1:
            out.append((lo, hi))
            return
        mid = (lo + hi) / 2
        if g(mid) == 0:
            # rational root hit exactly; shrink a separating box until the
            # Sturm count certifies it holds only this root
            eps = (hi - lo) / (4 * g.degree + 4)
            while _variations(chain, mid - eps) - _variations(chain, mid + eps) != 1:
                eps /= 4
            recurse(lo, mid - eps, vlo, _variations(chain, mid - eps))
            out.append((mid - eps, mid + eps))
            recurse(mid + eps, hi, _variations(chain, mid + eps), vhi)
            return
        vmid = _variations(chain, mid)
        recurse(lo, mid, vlo, vmid)
        recurse(mid, hi, vmid, vhi)

    lo, hi = -bound, bound
    recurse(lo, hi, _variations(chain, lo), _variations(chain, hi))
    return sorted(out)


def _refine_bisect(g: Poly, lo: Fraction, hi: Fraction, width: Fraction):
    """Shrink a bracketing interval by exact sign bisection."""
    flo = g(lo)
    if flo == 0:
        return lo, lo
    fhi = g(hi)
    if fhi == 0:
        return hi, hi
    while hi - lo > width:
        mid = (lo + hi) / 2
        fmid = g(mid)
        if fmid == 0:
            return mid, mid
        if (flo < 0) != (fmid < 0):
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
    return lo, hi


def real_roots(p: Poly, refine_bits: int = 80) -> RootList:
    """All real roots with isolating intervals and multiplicities.

    Multiplicities come from the squarefree decomposition; each squarefree
    factor is isolated with a Sturm chain and then refined by bisection to
    width 2**-refine_bits.
    """
    if p.is_zero:
        raise ValidationError("the zero polynomial has no root list")
    exact = Poly.from_coeffs([as_fraction(c) for c in p.coeffs])
    if exact.degree <= 0:
        return RootList((), (), ())
    width = Fraction(1, 2**refine_bits)
    found = []
    for factor, mult in squarefree_factors(exact):
        for lo, hi in _isolate_squarefree(factor):
            lo2, hi2 = _refine_bisect(factor, lo, hi, width)
            found.append(((lo2, hi2), mult))
    found.sort(key=lambda t: t[0][0])
    roots = []
    intervals = []
    mults = []
    for (lo, hi), mult in found:
        mid = (lo + hi) / 2
        roots.append(as_mpf(mid))
        intervals.append((lo, hi))
        mults.append(mult)
    return RootList(tuple(roots), tuple(intervals), tuple(mults))


# ---------------------------------------------------------------------------
# the two moment sequences

def nu_moment(J: HessenbergMatrix, n: int, ell: int):
    """Moment of the normalised zero counting measure: trace of the
    truncation's power over n, computed through band windows."""
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    diag = power_window(J, ell, range(n), trunc=n)
    with workprec(J.precision):
        return sum(diag, Fraction(0)) / n


def nu_moment_from_roots(p: Poly, ell: int, refine_bits: int = 100):
    """Independent route: power sum of the certified roots over the degree."""
    rl = real_roots(p, refine_bits=refine_bits)
    total = mpmath.mpf(0)
    for root, mult in zip(rl.roots, rl.multiplicities):
        total += mult * root**ell
    return total / p.degree


def eta_moment(J: HessenbergMatrix, n: int, ell: int):
    """Moment of the kernel-diagonal measure: the same diagonal sums taken in
    the full matrix rather than the truncation."""
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    diag = power_window(J, ell, range(n), trunc=None)
    with workprec(J.precision):
        return sum(diag, Fraction(0)) / n


@dataclass(frozen=True)
class MomentGapTable:
    rows: Tuple[Tuple[int, int, object, object, object], ...]
    slopes: dict

    def gap(self, n: int, ell: int):
        for row in self.rows:
            if row[0] == n and row[1] == ell:
                return row[4]
        raise KeyError((n, ell))


def _fit_slope(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / sxx


def moment_gap_experiment(J: HessenbergMatrix, n_list, ell_max: int) -> MomentGapTable:
    """Gap table |nu_moment - eta_moment| with a log-log decay fit per power.

    The fit needs at least four nonzero gaps; a column of identically zero
    gaps (symmetric measures at odd powers) reports slope None.
    """
    rows = []
    gaps_by_ell = {ell: [] for ell in range(ell_max + 1)}
    for n in sorted(set(int(v) for v in n_list)):
        for ell in range(ell_max + 1):
            nu = nu_moment(J, n, ell)
            eta = eta_moment(J, n, ell)
            gap = abs(nu - eta)
            rows.append((n, ell, nu, eta, gap))
            gaps_by_ell[ell].append((n, gap))
    slopes = {}
    for ell, pairs in gaps_by_ell.items():
        pts = [(math.log(n), math.log(float(g))) for n, g in pairs if g != 0]
        slopes[ell] = _fit_slope(*zip(*pts)) if len(pts) >= 4 else None
    return MomentGapTable(rows=tuple(rows), slopes=slopes)


# ---------------------------------------------------------------------------
# total variation of the kernel-diagonal measure

def tv_value(system, diagonal, n: int, tol=None):
    """Integral of |diagonal| against the reference measure over n."""
    total = mpmath.mpf(0)
    for iv, dens in system.reference.pieces:
        v, _ = _measures.quad_interval(
            lambda y: abs(as_mpf(diagonal(y))) * as_mpf(dens(y)), iv.a, iv.b, tol=tol
        )
        total += v
    for loc, mass in system.reference.atoms:
        total += abs(as_mpf(diagonal(loc))) * as_mpf(mass)
    return total / n


def tv_bound(family: BiorthogonalFamily, n_list, tol=None):
    """Per-n values of the normalised absolute diagonal mass; equals one when
    the diagonal is nonnegative."""
    out = []
    for n in n_list:
        K = CDKernel(family, n)
        with workprec(family.precision):
            out.append((n, tv_value(family.system, K.diagonal, n, tol=tol)))
    return out


# ---------------------------------------------------------------------------
# interlacing

@dataclass(frozen=True)
class InterlacingReport:
    interlacing: bool
    contained: bool
    boundary_contact: bool
    hypothesis_failure: Optional[str]
    witness: Optional[tuple]


def interlacing_check(p_n: Poly, p_next: Poly, hull=None,
                      refine_bits: int = 120, max_refine: int = 400) -> InterlacingReport:
    """Strict interlacing of consecutive zero sets plus hull containment.

    A shared root or a multiple root is a hypothesis failure, reported rather
    than raised.  `hull` is an (a, b) pair; roots inside the closed hull that
    touch its boundary are flagged separately.
    """
    pa = Poly.from_coeffs([as_fraction(c) for c in p_n.coeffs])
    pb = Poly.from_coeffs([as_fraction(c) for c in p_next.coeffs])
    common = poly_gcd(pa, pb)
    if common.degree >= 1:
        return InterlacingReport(False, False, False, "shared root between consecutive polynomials",
                                 witness=tuple(common.coeffs))
    ra = real_roots(pa, refine_bits=refine_bits)
    rb = real_roots(pb, refine_bits=refine_bits)
    if any(m > 1 for m in ra.multiplicities) or any(m > 1 for m in rb.multiplicities):
        return InterlacingReport(False, False, False, "multiple root", witness=None)
    if len(ra) != pa.degree or len(rb) != pb.degree:
        return InterlacingReport(False, False, False, "complex roots present", witness=None)

    ia = [list(t) for t in ra.intervals]
    ib = [list(t) for t in rb.intervals]

    def overlapping():
        merged = [(iv, 0, k) for k, iv in enumerate(ia)] + [(iv, 1, k) for k, iv in enumerate(ib)]
        merged.sort(key=lambda t: t[0][0])
        for (u, su, ku), (v, sv, kv) in zip(merged, merged[1:]):
            if v[0] < u[1]:
                return (su, ku), (sv, kv)
        return None

    polys = (pa, pb)
    lists = (ia, ib)
    for _ in range(max_refine):
        clash = overlapping()
        if clash is None:
            break
        for side, k in clash:
            lo, hi = lists[side][k]
            width = (hi - lo) / 4
            if width == 0:
                continue
            lo2, hi2 = _refine_bisect(polys[side], lo, hi, width)
            lists[side][k] = [lo2, hi2]
    else:
        raise PrecisionFailure("could not separate root intervals")

    merged = [(iv[0], 0) for iv in ia] + [(iv[0], 1) for iv in ib]
    merged.sort()
    pattern = [s for _, s in merged]
    ok = all(a != b for a, b in zip(pattern, pattern[1:])) and pattern[0] == 1 and pattern[-1] == 1

    contained = True
    boundary = False
    if hull is not None:
        a, b = as_fraction(hull[0]), as_fraction(hull[1])
        for lo, hi in [tuple(t) for t in ia] + [tuple(t) for t in ib]:
            if hi < a or lo > b:
                contained = False
            elif not (a < lo and hi < b):
                boundary = True
    witness = None
    if not ok:
        bad = next(i for i, (x, y) in enumerate(zip(pattern, pattern[1:])) if x == y)
        witness = (merged[bad][0], merged[bad + 1][0])
    return InterlacingReport(ok, contained, boundary, None, witness)


def weak_limit_compare(nu_moments, target_moments):
    """Per-degree absolute deviations between two moment lists."""
    if len(nu_moments) != len(target_moments):
        raise ValidationError("moment lists must have equal length")
    devs = [abs(as_mpf(a) - as_mpf(b)) for a, b in zip(nu_moments, target_moments)]
    return devs
