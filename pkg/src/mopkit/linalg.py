"""Linear solves for moment systems.

Exact solves clear denominators row-wise and run fraction-free (Bareiss)
elimination over the integers, which keeps intermediate growth polynomial;
floating solves go through mpmath's partially pivoted LU at the ambient
precision.  Moment matrices are badly conditioned, so the exact path is the
primary defence and the mpf path is only used where exactness is unavailable
or too expensive.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import mpmath

from .errors import MopkitError


class SingularMatrixError(MopkitError):
    """Square system has no unique solution."""


def _clear_denominators(row):
    den = 1
    for x in row:
        den = den * x.denominator // gcd(den, x.denominator)
    return [int(x * den) for x in row]


def solve_exact(matrix, rhs):
    """Solve A x = b exactly for Fraction entries.

    Bareiss elimination on the row-wise integer-scaled augmented matrix,
    followed by rational back-substitution.  Raises SingularMatrixError when
    a pivot column vanishes.
    """
    n = len(matrix)
    if n == 0:
        return []
    aug = []
    for row, b in zip(matrix, rhs):
        frow = [Fraction(v) for v in row] + [Fraction(b)]
        aug.append(_clear_denominators(frow))
    prev = 1
    for k in range(n - 1):
        pivot_row = None
        for i in range(k, n):
            if aug[i][k] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            raise SingularMatrixError(f"zero pivot column {k}")
        if pivot_row != k:
            aug[k], aug[pivot_row] = aug[pivot_row], aug[k]
        pk = aug[k][k]
        for i in range(k + 1, n):
            aik = aug[i][k]
            rowi = aug[i]
            rowk = aug[k]
            for j in range(k + 1, n + 1):
                rowi[j] = (pk * rowi[j] - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = pk
    if aug[n - 1][n - 1] == 0:
        raise SingularMatrixError("zero pivot in last column")
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = Fraction(aug[i][n])
        for j in range(i + 1, n):
            s -= aug[i][j] * x[j]
        x[i] = s / aug[i][i]
    return x


def det_exact(matrix):
    """Exact determinant via Bareiss on the integer-scaled matrix."""
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    rows = []
    scale = Fraction(1)
    for row in matrix:
        frow = [Fraction(v) for v in row]
        den = 1
        for x in frow:
            den = den * x.denominator // gcd(den, x.denominator)
        scale /= den
        rows.append([int(x * den) for x in frow])
    sign = 1
    prev = 1
    for k in range(n - 1):
        pivot_row = None
        for i in range(k, n):
            if rows[i][k] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            return Fraction(0)
        if pivot_row != k:
            rows[k], rows[pivot_row] = rows[pivot_row], rows[k]
            sign = -sign
        pk = rows[k][k]
        for i in range(k + 1, n):
            aik = rows[i][k]
            for j in range(k + 1, n):
                rows[i][j] = (pk * rows[i][j] - aik * rows[k][j]) // prev
            rows[i][k] = 0
        prev = pk
    return sign * scale * rows[n - 1][n - 1]


def solve_mpf(matrix, rhs):
    """Solve with mpmath's partially pivoted LU at the ambient precision."""
    n = len(matrix)
    if n == 0:
        return []
    A = mpmath.matrix(n, n)
    b = mpmath.matrix(n, 1)
    for i in range(n):
        for j in range(n):
            A[i, j] = mpmath.mpmathify(matrix[i][j])
        b[i] = mpmath.mpmathify(rhs[i])
    try:
        x = mpmath.lu_solve(A, b)
    except ZeroDivisionError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return [x[i] for i in range(n)]


def det_mpf(matrix):
    n = len(matrix)
    if n == 0:
        return mpmath.mpf(1)
    A = mpmath.matrix(n, n)
    for i in range(n):
        for j in range(n):
            A[i, j] = mpmath.mpmathify(matrix[i][j])
    return mpmath.det(A)


def solve_consistent(matrix, rhs, exact: bool, tol=None):
    """Solve an overdetermined but consistent system, checking the residual.

    Exact path: Gaussian elimination over the rationals with an exact
    consistency check of the dropped rows.  Float path: mpmath qr_solve with
    a residual bound (`tol` defaults to 2**(20 - prec) relative).
    """
    m = len(matrix)
    if m == 0:
        return []
    ncols = len(matrix[0])
    if exact:
        aug = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
        pivots = []
        r = 0
        for c in range(ncols):
            pivot_row = None
            for i in range(r, m):
                if aug[i][c] != 0:
                    pivot_row = i
                    break
            if pivot_row is None:
                continue
            aug[r], aug[pivot_row] = aug[pivot_row], aug[r]
            pv = aug[r][c]
            aug[r] = [v / pv for v in aug[r]]
            for i in range(m):
                if i != r and aug[i][c] != 0:
                    f = aug[i][c]
                    aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
            pivots.append(c)
            r += 1
            if r == m:
                break
        if len(pivots) < ncols:
            raise SingularMatrixError("rank-deficient expansion system")
        for i in range(r, m):
            if aug[i][ncols] != 0:
                raise SingularMatrixError("inconsistent expansion system")
        x = [Fraction(0)] * ncols
        for idx, c in enumerate(pivots):
            x[c] = aug[idx][ncols]
        return x
    A = mpmath.matrix(m, ncols)
    b = mpmath.matrix(m, 1)
    for i in range(m):
        for j in range(ncols):
            A[i, j] = mpmath.mpmathify(matrix[i][j])
        b[i] = mpmath.mpmathify(rhs[i])
    x, res = mpmath.qr_solve(A, b)
    scale = max(mpmath.mpf(1), mpmath.norm(b))
    limit = tol if tol is not None else mpmath.mpf(2) ** (20 - mpmath.mp.prec) * scale
    if res > limit:
        raise SingularMatrixError(f"expansion residual {mpmath.nstr(res, 6)} exceeds {mpmath.nstr(limit, 6)}")
    return [x[i] for i in range(ncols)]
