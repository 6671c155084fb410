"""Dense linear algebra over GF(2) on ``uint8`` arrays."""
from __future__ import annotations

import numpy as np


def as_bits(a) -> np.ndarray:
    return (np.asarray(a, dtype=np.int64) % 2).astype(np.uint8)


def rref(mat) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns. Zero rows are dropped."""
    m = as_bits(mat).copy()
    if m.ndim != 2:
        raise ValueError("rref expects a 2-d array")
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(m[r:, c])
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        others = np.flatnonzero(m[:, c])
        others = others[others != r]
        m[others] ^= m[r]
        pivots.append(c)
        r += 1
    return m[:r], pivots


def rank(mat) -> int:
    m = as_bits(mat)
    if m.size == 0:
        return 0
    return len(rref(m)[1])


def nullspace(mat) -> np.ndarray:
    """Basis (as rows) of ``{x : mat @ x = 0 mod 2}``."""
    m = as_bits(mat)
    cols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(cols, dtype=np.uint8)
    r, pivots = rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, p in enumerate(pivots):
            basis[i, p] = r[row, f]
    return basis


def solve(mat, rhs) -> np.ndarray | None:
    """One solution ``x`` of ``mat @ x = rhs`` over GF(2), or ``None``."""
    m = as_bits(mat)
    b = as_bits(rhs).reshape(-1, 1)
    aug, pivots = rref(np.hstack([m, b]))
    cols = m.shape[1]
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for row, p in enumerate(pivots):
        x[p] = aug[row, cols]
    return x


def in_rowspace(mat, vec) -> bool:
    return solve(as_bits(mat).T, vec) is not None
