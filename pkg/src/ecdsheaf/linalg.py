"""Exact rational matrix helpers on top of ``flint.fmpq_mat``.

Vectors are column matrices.  A subspace of Q^n is stored as an ``n x k``
matrix whose columns form a basis.  Nothing in this module touches floats.
"""

from __future__ import annotations

from fractions import Fraction

import flint

Mat = flint.fmpq_mat
fmpq = flint.fmpq


def zeros(m: int, n: int) -> Mat:
    return Mat(m, n)


def identity(n: int) -> Mat:
    if not n:
        return Mat(0, 0)
    return Mat(n, n, [int(i == j) for i in range(n) for j in range(n)])


def from_rows(rows, ncols: int | None = None) -> Mat:
    rows = [list(r) for r in rows]
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    M = Mat(len(rows), ncols)
    for i, r in enumerate(rows):
        if len(r) != ncols:
            raise ValueError("ragged matrix rows")
        for j, x in enumerate(r):
            if x:
                M[i, j] = _q(x)
    return M


def _q(x):
    if isinstance(x, Fraction):
        return fmpq(x.numerator, x.denominator)
    if isinstance(x, str):
        f = Fraction(x)
        return fmpq(f.numerator, f.denominator)
    return x


def to_rows(M: Mat) -> list[list]:
    n = M.ncols()
    e = M.entries()
    return [list(e[i * n:(i + 1) * n]) for i in range(M.nrows())]


def to_strings(M: Mat) -> list[list[str]]:
    return [[str(x) for x in r] for r in to_rows(M)]


def from_strings(rows, nrows: int, ncols: int) -> Mat:
    if nrows == 0 or ncols == 0:
        return Mat(nrows, ncols)
    return from_rows([[Fraction(x) for x in r] for r in rows], ncols)


def copy(M: Mat) -> Mat:
    return Mat(M)


def is_zero(M: Mat) -> bool:
    return all(x == 0 for x in M.entries())


def equal(A: Mat, B: Mat) -> bool:
    return A.nrows() == B.nrows() and A.ncols() == B.ncols() and A == B


def mul(*ms: Mat) -> Mat:
    out = ms[0]
    for m in ms[1:]:
        if out.ncols() != m.nrows():
            raise ValueError(f"shape mismatch {out.nrows()}x{out.ncols()} * {m.nrows()}x{m.ncols()}")
        if out.ncols() == 0 or out.nrows() == 0 or m.ncols() == 0:
            out = Mat(out.nrows(), m.ncols())
        else:
            out = out * m
    return out


def add(A: Mat, B: Mat) -> Mat:
    return A + B


def scale(A: Mat, c) -> Mat:
    return A * _q(c)


def hstack(*ms: Mat, nrows: int | None = None) -> Mat:
    if nrows is None:
        if not ms:
            raise ValueError("hstack of nothing needs nrows")
        nrows = ms[0].nrows()
    if any(m.nrows() != nrows for m in ms):
        raise ValueError("hstack row mismatch")
    return vstack(*[m.transpose() for m in ms], ncols=nrows).transpose()


def vstack(*ms: Mat, ncols: int | None = None) -> Mat:
    if ncols is None:
        if not ms:
            raise ValueError("vstack of nothing needs ncols")
        ncols = ms[0].ncols()
    entries = []
    for m in ms:
        if m.ncols() != ncols:
            raise ValueError("vstack column mismatch")
        entries += m.entries()
    nrows = sum(m.nrows() for m in ms)
    if not nrows or not ncols:
        return Mat(nrows, ncols)
    return Mat(nrows, ncols, entries)


def block_diag(*ms: Mat) -> Mat:
    out = Mat(sum(m.nrows() for m in ms), sum(m.ncols() for m in ms))
    r0 = c0 = 0
    for m in ms:
        _paste(out, m, r0, c0)
        r0 += m.nrows()
        c0 += m.ncols()
    return out


def _paste(out: Mat, m: Mat, r0: int, c0: int) -> None:
    n = m.ncols()
    for k, x in enumerate(m.entries()):
        if x != 0:
            out[r0 + k // n, c0 + k % n] = x


def add_into(out: Mat, m: Mat, r0: int, c0: int) -> None:
    n = m.ncols()
    for k, x in enumerate(m.entries()):
        if x != 0:
            out[r0 + k // n, c0 + k % n] += x


def submatrix(M: Mat, rows=None, cols=None) -> Mat:
    rows = range(M.nrows()) if rows is None else list(rows)
    cols = range(M.ncols()) if cols is None else list(cols)
    out = Mat(len(rows), len(cols))
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            x = M[r, c]
            if x != 0:
                out[i, j] = x
    return out


def column(M: Mat, j: int) -> Mat:
    return submatrix(M, cols=[j])


def rref(M: Mat) -> tuple[Mat, list[int]]:
    if M.nrows() == 0 or M.ncols() == 0:
        return Mat(M.nrows(), M.ncols()), []
    R, r = M.rref()
    pivots = []
    n = M.ncols()
    e = R.entries()
    for i in range(r):
        row = e[i * n:(i + 1) * n]
        for j, x in enumerate(row):
            if x != 0:
                pivots.append(j)
                break
    return R, pivots


def rank(M: Mat) -> int:
    if M.nrows() == 0 or M.ncols() == 0:
        return 0
    return M.rank()


def nullspace(M: Mat) -> Mat:
    """Basis (as columns) of {x : M x = 0}."""
    n = M.ncols()
    R, pivots = rref(M)
    free = [j for j in range(n) if j not in set(pivots)]
    N = Mat(n, len(free))
    for k, fj in enumerate(free):
        N[fj, k] = 1
        for i, pj in enumerate(pivots):
            x = R[i, fj]
            if x != 0:
                N[pj, k] = -x
    return N


def colspace(M: Mat) -> Mat:
    """Basis of the column space, chosen among the columns of ``M``."""
    _, pivots = rref(M)
    return submatrix(M, cols=pivots)


def rowspace(M: Mat) -> Mat:
    R, pivots = rref(M)
    return submatrix(R, rows=range(len(pivots)))


def solve(A: Mat, B: Mat) -> Mat | None:
    """Some X with A X = B, or None when the system is inconsistent."""
    m, n = A.nrows(), A.ncols()
    k = B.ncols()
    if m == 0:
        return Mat(n, k)
    R, pivots = rref(hstack(A, B))
    if any(p >= n for p in pivots):
        return None
    X = Mat(n, k)
    for i, pj in enumerate(pivots):
        for c in range(k):
            x = R[i, n + c]
            if x != 0:
                X[pj, c] = x
    return X


def in_span(basis: Mat, v: Mat) -> bool:
    return solve(basis, v) is not None


def coords(basis: Mat, v: Mat) -> Mat:
    """Coordinates of the columns of ``v`` in a basis with independent columns."""
    if basis.ncols() == 0:
        if not is_zero(v):
            raise ValueError("vector not in span of basis")
        return Mat(0, v.ncols())
    x = solve(basis, v)
    if x is None:
        raise ValueError("vector not in span of basis")
    return x


def left_inverse(B: Mat) -> Mat:
    """L with L B = I for B with independent columns."""
    n, k = B.nrows(), B.ncols()
    if k == 0:
        return Mat(0, n)
    X = solve(B.transpose(), identity(k))
    if X is None:
        raise ValueError("columns are not independent")
    return X.transpose()


def span_sum(*bases: Mat, dim: int) -> Mat:
    return colspace(hstack(*bases, nrows=dim))


def intersect(U: Mat, V: Mat) -> Mat:
    """Basis of span(U) ∩ span(V) (both given as column bases of the same ambient space)."""
    n = U.nrows()
    if U.ncols() == 0 or V.ncols() == 0:
        return Mat(n, 0)
    N = nullspace(hstack(U, -V))
    return colspace(mul(U, submatrix(N, rows=range(U.ncols()))))


def extend_to_basis(U: Mat, dim: int) -> Mat:
    """Columns completing the independent columns of U to a basis of Q^dim."""
    M = hstack(U, identity(dim), nrows=dim)
    _, pivots = rref(M)
    return submatrix(M, cols=[p for p in pivots if p >= U.ncols()])


def quotient(ambient_dim: int, sub: Mat) -> tuple[Mat, Mat]:
    """Projection onto Q^dim / span(sub).

    Returns ``(P, S)`` with ``P`` the ``q x dim`` projection to coordinates on
    a complement and ``S`` the ``dim x q`` section onto that complement.
    """
    sub = colspace(sub) if sub.ncols() else sub
    C = extend_to_basis(sub, ambient_dim)
    full = hstack(sub, C, nrows=ambient_dim)
    inv = full.inv() if ambient_dim else Mat(0, 0)
    P = submatrix(inv, rows=range(sub.ncols(), ambient_dim))
    return P, C


def kernel_of_sub(M: Mat, sub: Mat) -> Mat:
    """Basis of {v in span(sub) : M v = 0}, returned in ambient coordinates."""
    return mul(sub, nullspace(mul(M, sub)))
