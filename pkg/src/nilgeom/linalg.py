"""Row reduction and null spaces over the rationals or the reals.

The same elimination code serves both modes: entries are either
``fractions.Fraction`` (exact, zero test is ``== 0``) or floats (zero test
``abs(x) <= tol``).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

Row = list


def _is_zero(x, tol: float | None) -> bool:
    if tol is None:
        return x == 0
    return abs(x) <= tol


def to_fraction(x) -> Fraction:
    """Convert a number or a ``"p/q"`` string to a Fraction.

    Floats go through ``repr`` so that ``0.1`` becomes ``1/10`` rather than
    its binary expansion.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(repr(float(x)))


class EchelonBasis:
    """Incrementally maintained reduced row echelon form.

    Rows are added one at a time; a row that reduces to zero is dropped.
    ``tol=None`` selects exact arithmetic.
    """

    def __init__(self, ncols: int, tol: float | None = None):
        self.ncols = ncols
        self.tol = tol
        self.rows: list[Row] = []
        self.pivots: list[int] = []

    def __len__(self) -> int:
        return len(self.rows)

    def reduce(self, row: Sequence) -> Row:
        r = list(row)
        for prow, p in zip(self.rows, self.pivots):
            c = r[p]
            if not _is_zero(c, self.tol):
                r = [a - c * b for a, b in zip(r, prow)]
        return r

    def add(self, row: Sequence) -> bool:
        """Add ``row``; return True if it increased the rank."""
        r = self.reduce(row)
        # leftmost pivot keeps the final form the canonical RREF
        p = next((i for i, a in enumerate(r) if not _is_zero(a, self.tol)), None)
        if p is None:
            return False
        piv = r[p]
        r = [a / piv for a in r]
        if self.tol is not None:
            r[p] = 1.0
        # keep the form fully reduced
        for i, prow in enumerate(self.rows):
            c = prow[p]
            if not _is_zero(c, self.tol):
                self.rows[i] = [a - c * b for a, b in zip(prow, r)]
                if self.tol is not None:
                    self.rows[i][p] = 0.0
        self.rows.append(r)
        self.pivots.append(p)
        return True

    def canonical(self) -> list[Row]:
        """Rows sorted by pivot column: the unique RREF of the row space."""
        order = sorted(range(len(self.rows)), key=lambda i: self.pivots[i])
        return [self.rows[i] for i in order]

    def nullspace(self) -> list[Row]:
        """Basis of the solution space of ``rows @ v = 0``.

        One vector per free column, with a 1 in that column.
        """
        one, zero = (Fraction(1), Fraction(0)) if self.tol is None else (1.0, 0.0)
        pivset = set(self.pivots)
        basis = []
        for f in range(self.ncols):
            if f in pivset:
                continue
            v = [zero] * self.ncols
            v[f] = one
            for prow, p in zip(self.rows, self.pivots):
                v[p] = -prow[f]
            basis.append(v)
        return basis


def rref(rows: Sequence[Sequence], ncols: int | None = None, tol: float | None = None) -> list[Row]:
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    eb = EchelonBasis(ncols, tol)
    for r in rows:
        eb.add(r)
    return eb.canonical()


def rank(rows: Sequence[Sequence], ncols: int | None = None, tol: float | None = None) -> int:
    return len(rref(rows, ncols, tol))


def nullspace(rows: Sequence[Sequence], ncols: int, tol: float | None = None) -> list[Row]:
    eb = EchelonBasis(ncols, tol)
    for r in rows:
        eb.add(r)
    return eb.nullspace()


def canonical_basis(vectors: Sequence[Sequence], ncols: int, tol: float | None = None) -> list[Row]:
    """RREF basis of the span of ``vectors`` (unique for a given subspace)."""
    return rref(vectors, ncols, tol)


def float_nullspace(A: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (as columns) of ker A, rank cut at ``tol * max(1, s_max)``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if A.shape[0] == 0 or n == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(A)
    cut = tol * max(1.0, s[0] if s.size else 0.0)
    r = int(np.sum(s > cut))
    return vt[r:].T.copy()


def float_rowspace(A: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis (as rows) of the row space of A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return np.zeros((0, A.shape[1]))
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    cut = tol * max(1.0, s[0] if s.size else 0.0)
    r = int(np.sum(s > cut))
    return vt[:r].copy()


def orthonormalize_rows(rows: Sequence[Sequence]) -> np.ndarray:
    """Gram-Schmidt (via QR) on already independent rows, preserving order."""
    A = np.asarray([[float(a) for a in r] for r in rows], dtype=float)
    if A.size == 0:
        return A.reshape(0, 0)
    q, r = np.linalg.qr(A.T)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return (q * signs).T
