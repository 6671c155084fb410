"""Dense complex linear-algebra substrate.

Everything here works on plain ``numpy`` arrays. Rank decisions use
singular-value thresholding after rescaling to unit operator norm, so the
thresholds in :class:`Tolerances` keep the same meaning for every input.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when operands have incompatible or non-square shapes."""


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant (PSD, unit norm, ...)."""


class InternalConsistencyError(RuntimeError):
    """Raised when an internal self-check fails; usually a tolerance breakdown."""


@dataclass(frozen=True)
class Tolerances:
    """Tolerance pair used for equality tests and rank decisions.

    Args:
        eq_tol: threshold for equality / membership residuals.
        rank_tol: threshold on normalized singular values for rank decisions.
    """

    eq_tol: float = 1e-9
    rank_tol: float = 1e-10

    def __post_init__(self):
        if not (0.0 < self.rank_tol <= self.eq_tol < 1.0):
            raise ValueError(
                f"need 0 < rank_tol <= eq_tol < 1, got rank_tol={self.rank_tol}, eq_tol={self.eq_tol}"
            )


DEFAULT_TOL = Tolerances()


def as_square(x, name: str = "matrix") -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def hs_inner(x: np.ndarray, y: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(x* y)."""
    return complex(np.vdot(x, y))


def hs_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def trace_norm(x) -> float:
    """Sum of singular values of a square matrix."""
    a = as_square(x)
    if a.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def polar_decompose(x) -> tuple[np.ndarray, np.ndarray]:
    """Left polar decomposition ``x = u @ p`` with ``u`` unitary and ``p`` PSD.

    On a singular input the unitary is completed on the kernel by the
    SVD's own singular vectors, so ``Tr(u* x)`` is still the trace norm.
    """
    a = as_square(x)
    w, s, vh = np.linalg.svd(a)
    u = w @ vh
    p = dagger(vh) @ np.diag(s) @ vh
    p = 0.5 * (p + dagger(p))
    return u, p


def psd_sqrt(rho: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues in (-rank_tol, 0) are clamped."""
    a = as_square(rho)
    h = 0.5 * (a + dagger(a))
    evals, evecs = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(evals)))) if evals.size else 1.0
    if evals.size and evals.min() < -tol.rank_tol * scale:
        raise ValidationError(f"matrix is not PSD (min eigenvalue {evals.min():.3e})")
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ dagger(evecs)


def _op_norm(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.linalg.norm(x, 2))


def hs_orthonormalize(ops: Iterable, tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    """Gram-Schmidt in input order under the Hilbert-Schmidt inner product.

    Each input is scaled to unit operator norm before its residual is
    compared against ``rank_tol``; near-dependent inputs are dropped.
    """
    mats = [np.asarray(o, dtype=complex) for o in ops]
    if not mats:
        return []
    shape = mats[0].shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionError(f"operators must be square, got {shape}")
    for m in mats:
        if m.shape != shape:
            raise DimensionError(f"mixed operator shapes {shape} and {m.shape}")
    rows = _gram_schmidt_rows(np.array([m.reshape(-1) for m in mats]), shape[0], tol)
    return [r.reshape(shape) for r in rows]


def _gram_schmidt_rows(vecs: np.ndarray, n: int, tol: Tolerances,
                       start: np.ndarray | None = None) -> list[np.ndarray]:
    """Append the new directions of ``vecs`` to an orthonormal row set ``start``."""
    basis = [] if start is None else list(start)
    q = np.array(basis) if basis else np.zeros((0, vecs.shape[1]), dtype=complex)
    for v in vecs:
        scale = _op_norm(v.reshape(n, n))
        if scale == 0.0:
            continue
        r = v / scale
        # two passes keep orthogonality at machine precision
        for _ in range(2):
            if q.shape[0]:
                r = r - q.T @ (np.conj(q) @ r)
        nrm = np.linalg.norm(r)
        if nrm < tol.rank_tol:
            continue
        r = r / nrm
        basis.append(r)
        q = np.vstack([q, r[None, :]])
    return basis[0 if start is None else len(start):]


def commutator_superoperator(basis: Sequence[np.ndarray]) -> np.ndarray:
    """Stacked matrix of ``vec(x) -> vec(x e - e x)`` over the basis (row-major vec)."""
    if not basis:
        raise DimensionError("empty basis has no fixed dimension")
    n = basis[0].shape[0]
    eye = np.eye(n)
    blocks = [np.kron(eye, e.T) - np.kron(e, eye) for e in basis]
    return np.vstack(blocks)


def commutation_nullspace(basis: Sequence, tol: Tolerances = DEFAULT_TOL) -> list[np.ndarray]:
    """Basis of all ``x`` with ``x e = e x`` for every ``e`` in ``basis``.

    The returned matrices are HS-orthonormal (right singular vectors of the
    stacked commutator superoperator).
    """
    mats = [as_square(b, "basis element") for b in basis]
    if not mats:
        raise DimensionError("commutation_nullspace needs at least one element to fix the dimension")
    n = mats[0].shape[0]
    if any(m.shape != (n, n) for m in mats):
        raise DimensionError("basis elements must share one dimension")
    # unit operator norm per element keeps the absolute threshold meaningful
    mats = [m / _op_norm(m) for m in mats if _op_norm(m) > 0]
    if not mats:
        return [e.reshape(n, n) for e in np.eye(n * n, dtype=complex)]
    k = commutator_superoperator(mats)
    _, s, vh = np.linalg.svd(k, full_matrices=False)
    rank = int(np.sum(s > tol.rank_tol * max(1.0, s[0])))
    null = vh[rank:]
    return [np.conj(row).reshape(n, n) for row in null]


def orthonormal_range(cols: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the column span of ``cols``."""
    if cols.size == 0:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    rank = int(np.sum(s > tol.rank_tol * s[0]))
    return u[:, :rank]


def subspace_intersection(q1: np.ndarray, q2: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Intersection of two subspaces given by orthonormal rows.

    Eigenvalues of the projector composition ``P1 P2 P1`` equal the squared
    cosines of the principal angles; directions with value above
    ``1 - rank_tol`` span the intersection. Returned as orthonormal rows.
    """
    if q1.shape[0] == 0 or q2.shape[0] == 0:
        return np.zeros((0, q1.shape[1]), dtype=complex)
    overlap = np.conj(q1) @ q2.T
    u, s, _ = np.linalg.svd(overlap)
    keep = s ** 2 >= 1.0 - tol.rank_tol
    rows = u[:, : len(s)][:, keep].T @ q1
    return rows


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = n if rank is None else rank
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def expm_hermitian(h: np.ndarray, t: complex = 1j) -> np.ndarray:
    """``exp(t h)`` for Hermitian ``h`` through its eigendecomposition."""
    hh = 0.5 * (h + dagger(h))
    w, v = np.linalg.eigh(hh)
    return (v * np.exp(t * w)) @ dagger(v)
