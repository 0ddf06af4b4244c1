"""Exact rational linear algebra: row reduction and normal-equation solves.

Matrices are lists of rows of :class:`fractions.Fraction`.  Pivoting is the
first nonzero entry in column order, so every result is deterministic.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = list  # list[list[Fraction]]


def as_matrix(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def transpose(a: Matrix, ncols: int | None = None) -> Matrix:
    if not a:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*a)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col) if x and y), Fraction(0)) for col in bt]
            for row in a]


def matvec(a: Matrix, v: Sequence[Fraction]) -> list[Fraction]:
    return [sum((x * y for x, y in zip(row, v) if x and y), Fraction(0)) for row in a]


def rref(a: Matrix, ncols: int | None = None):
    """Reduced row echelon form of a copy of ``a``.

    Returns ``(R, pivots)`` where ``pivots[i]`` is the pivot column of row i.
    Only the first ``ncols`` columns are used for pivoting (default: all), so
    an augmented block to the right is carried along as a transform.
    """
    m = [list(row) for row in a]
    if not m:
        return m, []
    width = len(m[0]) if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(width):
        p = next((i for i in range(r, len(m)) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        pivot_row = m[r]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], pivot_row)]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank(a: Matrix) -> int:
    return len(rref(a)[1])


class _GramSolver:
    """Solves ``G y = b`` for a fixed square ``G`` and many right-hand sides."""

    def __init__(self, g: Matrix):
        n = len(g)
        self.n = n
        aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(g)]
        red, pivots = rref(aug, ncols=n)
        self.pivots = pivots
        self.transform = [row[n:] for row in red]

    def solve(self, b: Sequence[Fraction]):
        """A solution with free variables zero, or None when inconsistent."""
        c = matvec(self.transform, b)
        k = len(self.pivots)
        if any(c[k:]):
            return None
        y = [Fraction(0)] * self.n
        for i, col in enumerate(self.pivots):
            y[col] = c[i]
        return y


class NormalEquations:
    """Exact minimum-norm and least-squares solves for a fixed matrix ``A``.

    ``min_norm(b)`` returns the unique ``x`` minimizing ``sum(x_i^2)`` subject to
    ``A x = b`` by solving ``(A A^T) y = b`` and setting ``x = A^T y``; it
    returns None when ``b`` is outside the column space.  ``least_squares(b)``
    solves ``A^T A x = A^T b`` and reports the residual ``b - A x``.
    """

    def __init__(self, a: Matrix, ncols: int):
        self.a = a
        self.ncols = ncols
        self.at = transpose(a, ncols)
        self._rows = None
        self._cols = None

    @property
    def nrows(self) -> int:
        return len(self.a)

    def rank(self) -> int:
        return rank(self.a) if self.a else 0

    def _row_gram(self) -> _GramSolver:
        if self._rows is None:
            self._rows = _GramSolver(matmul(self.a, self.at))
        return self._rows

    def _col_gram(self) -> _GramSolver:
        if self._cols is None:
            self._cols = _GramSolver(matmul(self.at, self.a))
        return self._cols

    def min_norm(self, b: Sequence[Fraction]):
        if not self.a:
            return [Fraction(0)] * self.ncols
        y = self._row_gram().solve(b)
        if y is None:
            return None
        x = matvec(self.at, y)
        if matvec(self.a, x) != list(b):
            # A A^T y = b consistent implies A x = b; guard against misuse
            return None
        return x

    def least_squares(self, b: Sequence[Fraction]):
        if not self.a or not self.ncols:
            return [Fraction(0)] * self.ncols, list(b)
        x = self._col_gram().solve(matvec(self.at, b))
        residual = [bi - ai for bi, ai in zip(b, matvec(self.a, x))]
        return x, residual
