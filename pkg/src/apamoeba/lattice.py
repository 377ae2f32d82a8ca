"""Exact integer lattice helpers: row Hermite normal form and membership."""
from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

IntMatrix = List[List[int]]


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> Tuple[IntMatrix, IntMatrix]:
    """Row-style Hermite normal form of an integer matrix.

    Returns ``(H, U)`` with ``H = U @ M`` where ``U`` is unimodular. The nonzero
    rows of ``H`` come first, are in echelon form with strictly increasing pivot
    columns, have positive pivots, and every entry above a pivot lies in
    ``[0, pivot)``. Those nonzero rows form a basis of the row lattice of ``M``.
    """
    m = [list(map(int, r)) for r in rows]
    n = len(m)
    ncols = len(m[0]) if n else 0
    u = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap(i: int, j: int) -> None:
        m[i], m[j] = m[j], m[i]
        u[i], u[j] = u[j], u[i]

    def addmul(dst: int, src: int, k: int) -> None:
        # row[dst] += k * row[src]
        if k:
            m[dst] = [a + k * b for a, b in zip(m[dst], m[src])]
            u[dst] = [a + k * b for a, b in zip(u[dst], u[src])]

    def negate(i: int) -> None:
        m[i] = [-a for a in m[i]]
        u[i] = [-a for a in u[i]]

    r = 0
    for c in range(ncols):
        if r >= n:
            break
        while True:
            nz = [i for i in range(r, n) if m[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(m[i][c]))
            swap(r, piv)
            done = True
            for i in range(r + 1, n):
                if m[i][c]:
                    addmul(i, r, -(m[i][c] // m[r][c]))
                    if m[i][c]:
                        done = False
            if done:
                break
        if m[r][c] == 0:
            continue
        if m[r][c] < 0:
            negate(r)
        for i in range(r):
            addmul(i, r, -(m[i][c] // m[r][c]))
        r += 1
    return m, u


def echelon_basis(rows: Sequence[Sequence[int]]) -> IntMatrix:
    """Nonzero rows of the Hermite normal form (a lattice basis)."""
    h, _ = hermite_normal_form(rows)
    return [row for row in h if any(row)]


def solve_in_echelon(basis: Sequence[Sequence[int]], v: Sequence[int]) -> Optional[List[int]]:
    """Integer coefficients expressing ``v`` in an echelon basis, or None."""
    rest = list(map(int, v))
    coeffs = []
    for row in basis:
        c = next(j for j, a in enumerate(row) if a)
        q, rem = divmod(rest[c], row[c])
        if rem:
            return None
        coeffs.append(q)
        if q:
            rest = [a - q * b for a, b in zip(rest, row)]
    if any(rest):
        return None
    return coeffs


def rational_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank over Q by fraction-exact Gaussian elimination."""
    m = [[Fraction(a) for a in r] for r in rows]
    if not m:
        return 0
    rank = 0
    ncols = len(m[0])
    for c in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][c] != 0:
                f = m[i][c] / m[rank][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def determinant(rows: Sequence[Sequence[int]]) -> Fraction:
    m = [[Fraction(a) for a in r] for r in rows]
    n = len(m)
    if any(len(r) != n for r in m):
        raise ValueError("determinant needs a square matrix")
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, n):
            f = m[i][c] / m[c][c]
            m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det
