"""Exact linear algebra over symbolic matrix entries.

Gaussian elimination with is_zero pivoting.  Pivot decisions on entries that
are not structural zeros fall back to the probabilistic zero test, which is
recorded policy: entries produced by the field-theory pipelines are rational
polynomials where the test is sound with overwhelming probability, and every
downstream result is re-verified by residual checks.
"""

from __future__ import annotations

from fractions import Fraction

from .symexpr import ONE, ZERO, Expr, ZeroOptions, as_expr, is_zero
from .symexpr.zero import DEFAULT_OPTIONS

Matrix = list  # list[list[Expr]]


def mat(rows) -> Matrix:
    return [[as_expr(e) for e in row] for row in rows]


def mat_vec(A: Matrix, v: list) -> list:
    return [
        sum((A[i][j] * v[j] for j in range(len(v))), ZERO) for i in range(len(A))
    ]


def transpose(A: Matrix) -> Matrix:
    return [list(col) for col in zip(*A)]


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    Bt = transpose(B)
    return [[sum((a * b for a, b in zip(row, col)), ZERO) for col in Bt] for row in A]


def _nonzero(e: Expr, opts: ZeroOptions) -> bool:
    return not is_zero(e, opts)


def rref(A: Matrix, opts: ZeroOptions | None = None):
    """Reduced row echelon form; returns (rows, pivot column list)."""
    opts = opts or DEFAULT_OPTIONS
    rows = [list(r) for r in A]
    nrows = len(rows)
    ncols = len(rows[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, nrows):
            if _nonzero(rows[i][c], opts):
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        inv = ONE / rows[r][c]
        rows[r] = [e * inv for e in rows[r]]
        for i in range(nrows):
            if i == r:
                continue
            factor = rows[i][c]
            if factor.is_structural_zero():
                continue
            rows[i] = [e - factor * p for e, p in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return rows, pivots


def rank(A: Matrix, opts: ZeroOptions | None = None) -> int:
    _, pivots = rref(A, opts)
    return len(pivots)


def nullspace(A: Matrix, opts: ZeroOptions | None = None) -> list:
    """Basis of the right kernel, one coefficient list per basis vector."""
    opts = opts or DEFAULT_OPTIONS
    ncols = len(A[0]) if A else 0
    rows, pivots = rref(A, opts)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [ZERO] * ncols
        vec[f] = ONE
        for r, c in enumerate(pivots):
            vec[c] = -rows[r][f]
        basis.append(vec)
    return basis


def solve(A: Matrix, b: list, opts: ZeroOptions | None = None):
    """One solution of A x = b, or None when inconsistent.

    Returns (particular, kernel_basis, residual_rows) where residual_rows
    lists the inconsistent equations' residual expressions (empty when
    solvable).
    """
    opts = opts or DEFAULT_OPTIONS
    ncols = len(A[0]) if A else 0
    aug = [list(row) + [rhs] for row, rhs in zip(A, b)]
    rows, pivots = rref(aug, opts)
    residuals = []
    for r in range(len(rows)):
        lead_in_body = any(
            _nonzero(rows[r][c], opts) for c in range(ncols)
        )
        if not lead_in_body and _nonzero(rows[r][ncols], opts):
            residuals.append(rows[r][ncols])
    if residuals:
        return None, [], residuals
    body_pivots = [c for c in pivots if c < ncols]
    particular = [ZERO] * ncols
    for r, c in enumerate(body_pivots):
        particular[c] = rows[r][ncols]
    kernel = nullspace([row[:ncols] for row in aug], opts)
    return particular, kernel, []


def inverse(A: Matrix, opts: ZeroOptions | None = None) -> Matrix | None:
    opts = opts or DEFAULT_OPTIONS
    n = len(A)
    aug = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(A)]
    rows, pivots = rref(aug, opts)
    if pivots[:n] != list(range(n)):
        return None
    return [row[n:] for row in rows]


def det(A: Matrix) -> Expr:
    """Exact determinant by cofactor expansion (small matrices only)."""
    n = len(A)
    if n == 0:
        return ONE
    if n == 1:
        return A[0][0]
    total = ZERO
    for j in range(n):
        if A[0][j].is_structural_zero():
            continue
        minor = [row[:j] + row[j + 1 :] for row in A[1:]]
        term = A[0][j] * det(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total
