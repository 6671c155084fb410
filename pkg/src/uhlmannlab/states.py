"""Vector states, algebra functionals, fidelity, GNS and purification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    DimensionError,
    Tolerances,
    ValidationError,
    as_square,
    dagger,
    orthonormal_range,
    psd_sqrt,
    trace_norm,
)


def as_state(vec, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Validate a unit vector; returns it as a complex 1-d array."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValidationError("state has non-finite amplitudes")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > tol.eq_tol:
        raise ValidationError(f"state is not unit norm (norm {nrm:.12g})")
    return v


def as_density(rho, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Validate a density matrix (Hermitian, PSD, unit trace)."""
    a = as_square(rho, "density matrix")
    if np.linalg.norm(a - dagger(a)) > tol.eq_tol * max(1.0, np.linalg.norm(a)):
        raise ValidationError("density matrix is not Hermitian")
    evals = np.linalg.eigvalsh(0.5 * (a + dagger(a)))
    if evals.min() < -tol.eq_tol:
        raise ValidationError(f"density matrix is not PSD (min eigenvalue {evals.min():.3e})")
    tr = np.trace(a).real
    if abs(tr - 1.0) > tol.eq_tol:
        raise ValidationError(f"density matrix trace is {tr:.12g}, expected 1")
    return a


@dataclass(frozen=True)
class AlgebraFunctional:
    """Linear functional on an algebra, stored by its values on the algebra's basis.

    Only meaningful for :class:`~uhlmannlab.algebra.OperatorAlgebra` (the
    tensor-factor representation uses the reduced density matrix instead).
    """

    algebra: object
    values: np.ndarray

    def density(self) -> np.ndarray:
        """The unique ``rho`` in span(M) with ``omega(a) = Tr(rho a)``."""
        return np.tensordot(self.values, dagger(self.algebra.basis), axes=1)

    def __call__(self, x) -> complex:
        return complex(np.trace(self.density() @ np.asarray(x, dtype=complex)))

    @classmethod
    def from_density(cls, algebra, rho) -> "AlgebraFunctional":
        r = np.asarray(rho, dtype=complex)
        return cls(algebra, np.einsum("ab,iba->i", r, algebra.basis))


def marginal(psi, m) -> AlgebraFunctional:
    """Restriction of the vector state ``psi`` to the algebra ``m``."""
    v = np.asarray(psi, dtype=complex)
    if v.shape[0] != m.hilbert_dim:
        raise DimensionError(f"state on C^{v.shape[0]} vs algebra on C^{m.hilbert_dim}")
    return AlgebraFunctional(m, marginal_values(v, m))


def marginal_values(psi: np.ndarray, m) -> np.ndarray:
    """``<psi, e_i psi>`` over the algebra's (possibly implicit) basis."""
    return np.conj(psi) @ m.basis_action(psi)


def marginals_equal(psi, phi, m, tol: float | None = None) -> tuple[bool, float]:
    """Whether two vector states agree on ``m``; also returns the max deviation."""
    t = DEFAULT_TOL.eq_tol if tol is None else tol
    a, b = np.asarray(psi, dtype=complex), np.asarray(phi, dtype=complex)
    if a.shape != b.shape or a.shape[0] != m.hilbert_dim:
        raise DimensionError("states and algebra must share one Hilbert space")
    dev = float(np.max(np.abs(marginal_values(a, m) - marginal_values(b, m))))
    return dev <= t, dev


def fidelity(rho, sigma, tol: Tolerances = DEFAULT_TOL) -> float:
    """``|| sqrt(rho) sqrt(sigma) ||_1``."""
    r, s = as_density(rho, tol), as_density(sigma, tol)
    if r.shape != s.shape:
        raise DimensionError(f"density matrices of shapes {r.shape} and {s.shape}")
    return trace_norm(psd_sqrt(r, tol) @ psd_sqrt(s, tol))


def purify(rho, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Standard purification ``sum_i sqrt(l_i) v_i (x) e_i`` on C^n (x) C^n.

    Eigenvalues are taken in descending order and every eigenvector is
    rephased so its first non-negligible amplitude is real positive.
    """
    r = as_density(rho, tol)
    n = r.shape[0]
    evals, evecs = np.linalg.eigh(0.5 * (r + dagger(r)))
    order = np.argsort(-evals, kind="stable")
    evals, evecs = np.clip(evals[order], 0.0, None), evecs[:, order]
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        v = evecs[:, i]
        lead = np.flatnonzero(np.abs(v) > np.sqrt(tol.rank_tol))[0]
        v = v * (abs(v[lead]) / v[lead])
        out[:, i] = np.sqrt(evals[i]) * v
    return out.reshape(-1)


def partial_trace_second(psi, dims: tuple[int, int]) -> np.ndarray:
    """Reduced density matrix on the first factor of a vector in C^a (x) C^b."""
    m = np.asarray(psi, dtype=complex).reshape(dims)
    return m @ dagger(m)


def partial_trace_first(psi, dims: tuple[int, int]) -> np.ndarray:
    m = np.asarray(psi, dtype=complex).reshape(dims)
    return m.T @ np.conj(m)


def cyclic_projection(m, psi, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthogonal projection onto the cyclic subspace ``[M psi]``."""
    v = np.asarray(psi, dtype=complex)
    if v.shape[0] != m.hilbert_dim:
        raise DimensionError(f"state on C^{v.shape[0]} vs algebra on C^{m.hilbert_dim}")
    q = orthonormal_range(m.basis_action(v), tol)
    return q @ dagger(q)


@dataclass(frozen=True)
class GnsData:
    """Cyclic representation of a positive functional.

    ``rep_matrices[i]`` represents the i-th algebra basis element on the
    GNS space; ``cyclic_vector`` is the class of the identity.
    """

    gns_dim: int
    rep_matrices: np.ndarray
    cyclic_vector: np.ndarray

    def expectation(self, i: int) -> complex:
        return complex(np.vdot(self.cyclic_vector, self.rep_matrices[i] @ self.cyclic_vector))


def gns_construct(m, omega: AlgebraFunctional, tol: Tolerances = DEFAULT_TOL) -> GnsData:
    """GNS representation of ``omega`` on the basis algebra ``m``.

    Works in coefficient space: the Gram matrix ``G_ij = omega(e_i* e_j)``
    defines the inner product, its kernel is the null ideal, and left
    multiplication is compressed onto an orthonormal basis of the quotient.
    """
    basis = m.basis
    d, n = basis.shape[0], m.hilbert_dim
    rho = omega.density()
    # G_ij = Tr(rho e_i* e_j)
    gram = np.einsum("ab,icb,jca->ij", rho, np.conj(basis), basis)
    gram = 0.5 * (gram + dagger(gram))
    evals, evecs = np.linalg.eigh(gram)
    scale = max(1.0, float(np.max(np.abs(evals))))
    if evals.min() < -tol.eq_tol * scale:
        raise ValidationError(f"functional is not positive (Gram eigenvalue {evals.min():.3e})")
    keep = evals > tol.rank_tol * scale
    eta = evecs[:, keep] / np.sqrt(evals[keep])
    rows = basis.reshape(d, -1)
    # left multiplication in coefficients: (L_a)_kj = <e_k, a e_j>
    reps = []
    for a in basis:
        prod = np.einsum("ab,jbc->jac", a, basis).reshape(d, -1)
        left = np.conj(rows) @ prod.T
        reps.append(dagger(eta) @ gram @ left @ eta)
    one = np.conj(rows) @ np.eye(n).reshape(-1)
    omega_vec = dagger(eta) @ gram @ one
    return GnsData(int(keep.sum()), np.array(reps), omega_vec)
