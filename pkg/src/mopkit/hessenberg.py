"""Lower-Hessenberg matrix of multiplication by x in a monic basis.

Row l expands x p_l over p_0 .. p_{l+1} by back-substitution: the change of
basis between the monic sequence and the monomials is unitriangular, so in
exact mode the expansion is exact.  The same matrix can be rebuilt from the
nearest-neighbour recurrence coefficients via a product formula over the
path; the two constructions must agree entrywise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from . import linalg
from .errors import BoundsError, MopkitError, ValidationError
from .mop import BiorthogonalFamily
from .polys import Poly
from .scalars import Scalar, workprec


@dataclass(eq=False)
class HessenbergMatrix:
    """N rows of the multiplication matrix; row l stores columns 0 .. l+1,
    with the superdiagonal entry structurally equal to one."""

    rows: list
    mode: str
    precision: int

    @property
    def size(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> Scalar:
        if not 0 <= i < self.size:
            raise BoundsError(f"row {i} outside built range 0..{self.size - 1}")
        if j < 0:
            raise BoundsError(f"negative column {j}")
        if j > i + 1:
            return Fraction(0)
        return self.rows[i][j]

    def truncate(self, n: int):
        """Dense n-by-n leading principal submatrix."""
        if n > self.size:
            raise BoundsError(f"truncation {n} exceeds built size {self.size}")
        return [[self.entry(i, j) if j <= i + 1 else Fraction(0) for j in range(n)] for i in range(n)]

    def triplets(self):
        """(row, col, value) for every stored entry."""
        out = []
        for i, row in enumerate(self.rows):
            for j, v in enumerate(row):
                out.append((i, j, v))
        return out


def truncate(J: HessenbergMatrix, n: int):
    return J.truncate(n)


def build_J(family: BiorthogonalFamily, N: int, verify: bool = False, verify_tol=None) -> HessenbergMatrix:
    """Expand x p_l over the monic basis for l < N.

    With verify=True each computed entry J[l, k] for k <= l is cross-checked
    against the scalar product of x p_l with q_k (a pure moment computation).
    """
    if N > family.length:
        raise BoundsError(f"N={N} needs a path of length >= {N}, got {family.length}")
    rows = []
    with workprec(family.precision):
        for ell in range(N):
            g = list(family.p(ell).shift_up().coeffs)
            row = [Fraction(0)] * (ell + 2)
            for k in range(ell + 1, -1, -1):
                c = g[k] if k < len(g) else Fraction(0)
                row[k] = c
                if c != 0:
                    pk = family.p(k).coeffs
                    for t, b in enumerate(pk):
                        g[t] -= c * b
            row[ell + 1] = Fraction(1)
            rows.append(row)
            if verify:
                shifted = family.p(ell).shift_up()
                for k in range(min(ell + 1, family.length - 1)):
                    ref = family.pair_poly_q(shifted, k)
                    diff = row[k] - ref
                    if family.exact:
                        if diff != 0:
                            raise MopkitError(f"entry ({ell},{k}) disagrees with the moment pairing: {diff}")
                    else:
                        import mpmath

                        scale = max(1, abs(ref))
                        limit = verify_tol if verify_tol is not None else mpmath.mpf(2) ** (40 - family.precision)
                        if abs(diff) > limit * scale:
                            raise MopkitError(
                                f"entry ({ell},{k}) off by {mpmath.nstr(abs(diff), 6)} vs moment pairing"
                            )
    return HessenbergMatrix(rows=rows, mode=family.mode, precision=family.precision)


@dataclass(frozen=True)
class NNRRCoeffs:
    """Nearest-neighbour recurrence data at one multi-index: x P_n equals
    P_{n+e_k} + b_k P_n + sum_j a_j P_{n-e_j} for every direction k."""

    index: Tuple[int, ...]
    b: Tuple[Scalar, ...]
    a: Tuple[Scalar, ...]


def _b_coefficient(family: BiorthogonalFamily, n: Tuple[int, ...], k: int) -> Scalar:
    """Diagonal recurrence coefficient in direction k at index n."""
    size = sum(n)
    pn = family.type2_at(n).poly
    plus = list(n)
    plus[k - 1] += 1
    pk = family.type2_at(tuple(plus)).poly
    g = pn.shift_up() - pk
    return g.coeff(size)


def nnrr(family: BiorthogonalFamily, n, directions=None) -> NNRRCoeffs:
    """Extract recurrence coefficients by matching polynomial expansions.

    The residual x P_n - P_{n+e_k} - b_k P_n must be independent of k and lie
    in the span of the lower neighbours; an inconsistency raises, it is never
    averaged away.
    """
    n = tuple(int(v) for v in n)
    if len(n) != family.system.r:
        raise ValidationError(f"index {n} does not match r={family.system.r}")
    size = sum(n)
    r = family.system.r
    ks = list(range(1, r + 1)) if directions is None else sorted(set(directions))
    pn = family.type2_at(n).poly
    residuals = []
    bs = {}
    with workprec(family.precision):
        for k in ks:
            plus = list(n)
            plus[k - 1] += 1
            g = pn.shift_up() - family.type2_at(tuple(plus)).poly
            bk = g.coeff(size)
            bs[k] = bk
            residuals.append(g - pn.scale(bk))
        base = residuals[0]
        for other in residuals[1:]:
            diff = other - base
            if family.exact:
                if not diff.is_zero:
                    raise MopkitError(f"residuals at {n} differ across directions: {diff.coeffs}")
            else:
                import mpmath

                scale = max([mpmath.mpf(1)] + [abs(c) for c in base.coeffs])
                limit = mpmath.mpf(2) ** (30 - family.precision) * scale
                if any(abs(c) > limit for c in diff.coeffs):
                    raise MopkitError(f"residuals at {n} inconsistent across directions beyond tolerance")
        lower = [j for j in range(1, r + 1) if n[j - 1] >= 1]
        a = [Fraction(0)] * r
        if lower and size >= 1:
            cols = []
            for j in lower:
                minus = list(n)
                minus[j - 1] -= 1
                cols.append(family.type2_at(tuple(minus)).poly)
            matrix = [[c.coeff(t) for c in cols] for t in range(size)]
            rhs = [base.coeff(t) for t in range(size)]
            sol = linalg.solve_consistent(matrix, rhs, exact=family.exact)
            for j, v in zip(lower, sol):
                a[j - 1] = v
        elif not base.is_zero and family.exact:
            raise MopkitError(f"nonzero residual at boundary index {n}")
    b_full = []
    for k in range(1, r + 1):
        b_full.append(bs[k] if k in bs else _b_coefficient(family, n, k))
    return NNRRCoeffs(index=n, b=tuple(b_full), a=tuple(a))


def build_J_from_nnrr(family: BiorthogonalFamily, N: int) -> HessenbergMatrix:
    """Rebuild the matrix from recurrence coefficients along the path.

    Row l: the diagonal is b at n_l in the step direction, and column j
    below it accumulates a_k times products of b-differences taken along the
    path between j and l.  A factor whose shifted index would leave the
    lattice contributes zero, matching the vanishing of the absent
    polynomial.
    """
    if N > family.length:
        raise BoundsError(f"N={N} needs a path of length >= {N}, got {family.length}")
    path = family.path
    bmemo = {}

    def b_at(idx, k):
        key = (idx, k)
        if key not in bmemo:
            bmemo[key] = _b_coefficient(family, idx, k)
        return bmemo[key]

    rows = []
    with workprec(family.precision):
        for ell in range(N):
            n_ell = family.index(ell)
            coeffs = nnrr(family, n_ell)
            row = [Fraction(0)] * (ell + 2)
            row[ell + 1] = Fraction(1)
            row[ell] = coeffs.b[path.step_component(ell) - 1]
            for k in range(1, family.system.r + 1):
                ak = coeffs.a[k - 1]
                if ak == 0:
                    continue
                prod = Fraction(1)
                for j in range(ell - 1, -1, -1):
                    row[j] += ak * prod
                    m = j + 1
                    if m < 2:
                        break
                    idx = family.index(m - 1)
                    i_prev = path.step_component(m - 1)
                    if i_prev == k:
                        factor = Fraction(0)
                    elif idx[k - 1] == 0:
                        factor = Fraction(0)
                    else:
                        shifted = list(idx)
                        shifted[k - 1] -= 1
                        shifted = tuple(shifted)
                        factor = b_at(shifted, k) - b_at(shifted, i_prev)
                    prod = prod * factor
                    if prod == 0:
                        break
            rows.append(row)
    return HessenbergMatrix(rows=rows, mode=family.mode, precision=family.precision)


def charpoly(J: HessenbergMatrix, n: int) -> Poly:
    """det(x Id_n - J_n) via the expansion recurrence of the last row.

    The determinants f_m satisfy x f_{m-1} = sum_j J[m-1, j] f_j with
    f_0 = 1, so they reproduce the monic sequence itself.
    """
    if n > J.size:
        raise BoundsError(f"charpoly at {n} needs {n} built rows, have {J.size}")
    with workprec(J.precision):
        f = [Poly.one()]
        for m in range(1, n + 1):
            nxt = f[m - 1].shift_up()
            for j in range(m):
                c = J.entry(m - 1, j)
                if c != 0:
                    nxt = nxt - f[j].scale(c)
            f.append(nxt)
    return f[n]


@dataclass(frozen=True)
class NDBProfile:
    """Per-offset suprema |J[l, l-d]| for d = -1 .. R, with the running
    supremum by row for stability inspection."""

    offsets: dict
    cumulative: dict
    rows: int

    def supremum(self, d: int):
        return self.offsets[d]

    def supremum_upto(self, d: int, rows: int):
        if rows < 1:
            raise ValidationError("need at least one row")
        series = self.cumulative[d]
        return series[min(rows, len(series)) - 1]


def ndb_profile(J: HessenbergMatrix, R: int) -> NDBProfile:
    if R < 0:
        raise ValidationError(f"band radius must be >= 0, got {R}")
    offsets = {}
    cumulative = {}
    for d in range(-1, R + 1):
        sup = Fraction(0)
        series = []
        for ell in range(J.size):
            col = ell - d
            if 0 <= col <= ell + 1:
                v = abs(J.entry(ell, col))
                if v > sup:
                    sup = v
            series.append(sup)
        offsets[d] = sup
        cumulative[d] = tuple(series)
    return NDBProfile(offsets=offsets, cumulative=cumulative, rows=J.size)


def _power_diagonal(J: HessenbergMatrix, ell: int, j: int, trunc: Optional[int]) -> Scalar:
    if ell == 0:
        return Fraction(1)
    lo = max(0, j - ell + 1)
    hi = j + ell - 1
    if trunc is not None:
        hi = min(hi, trunc - 1)
    if hi >= J.size:
        raise BoundsError(f"power {ell} at row {j} needs {hi + 1} rows, have {J.size}")
    width = hi - lo + 1
    vec = [Fraction(0)] * width
    vec[j - lo] = Fraction(1)
    for _ in range(ell):
        nxt = [Fraction(0)] * width
        for a in range(width):
            va = vec[a]
            if va == 0:
                continue
            row = a + lo
            top = min(row + 1, hi)
            for b in range(lo, top + 1):
                e = J.entry(row, b)
                if e != 0:
                    nxt[b - lo] += va * e
        vec = nxt
    return vec[j - lo]


def power_window(J: HessenbergMatrix, ell: int, rows, trunc: Optional[int] = None):
    """Diagonal entries [J^ell]_{jj} for j in `rows`, using only the entries
    inside the band window the Hessenberg structure allows the power to see.

    `trunc` restricts to the n-by-n truncation (indices below trunc only).
    """
    if ell < 0:
        raise ValidationError(f"power must be >= 0, got {ell}")
    with workprec(J.precision):
        return [_power_diagonal(J, ell, j, trunc) for j in rows]
