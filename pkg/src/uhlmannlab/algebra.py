"""Finite-dimensional von Neumann algebras on C^n.

Two concrete representations share one duck-typed surface:

* :class:`OperatorAlgebra` stores a Hilbert-Schmidt orthonormal basis and is
  the general-purpose model.
* :class:`TensorFactorAlgebra` is ``B(H_S) (x) 1`` for a subset ``S`` of tensor
  sites. It never materializes its basis, which keeps many-qubit tensor splits
  tractable.

Both expose ``hilbert_dim``, ``dim``, ``project``, ``residual``,
``generators``, ``basis_action``, ``commutant``, ``block_decomposition`` and
random element samplers. The module-level functions dispatch on these.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .numerics import (
    DEFAULT_TOL,
    DimensionError,
    InternalConsistencyError,
    Tolerances,
    as_square,
    commutation_nullspace,
    dagger,
    expm_hermitian,
    _gram_schmidt_rows,
    random_unitary,
    subspace_intersection,
)


@dataclass(frozen=True)
class BlockDecomposition:
    """Structure data ``W* M W = (+)_k M_{n_k} (x) 1_{m_k}``.

    Columns of ``basis_change`` are ordered block by block; inside block ``k``
    the index is ``i * m_k + s`` with ``i < n_k`` the factor index and
    ``s < m_k`` the multiplicity index.
    """

    basis_change: np.ndarray
    blocks: tuple[tuple[int, int], ...]
    central_projections: tuple[np.ndarray, ...]

    @property
    def offsets(self) -> list[int]:
        out, acc = [], 0
        for n_k, m_k in self.blocks:
            out.append(acc)
            acc += n_k * m_k
        return out

    def block_slices(self) -> list[slice]:
        return [slice(o, o + n * m) for o, (n, m) in zip(self.offsets, self.blocks)]


class OperatorAlgebra:
    """Unital *-algebra of operators on C^n stored as an HS-orthonormal basis.

    Instances are treated as immutable; derived objects (commutant, block
    decomposition) are cached on first use.
    """

    def __init__(self, basis: np.ndarray, tol: Tolerances = DEFAULT_TOL):
        b = np.asarray(basis, dtype=complex)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise DimensionError(f"basis must have shape (d, n, n), got {b.shape}")
        b.setflags(write=False)
        self._basis = b
        self.tol = tol

    @classmethod
    def from_spanning_set(cls, ops: Sequence[np.ndarray], hilbert_dim: int,
                          tol: Tolerances = DEFAULT_TOL) -> "OperatorAlgebra":
        vecs = np.array([np.asarray(o, dtype=complex).reshape(-1) for o in ops]).reshape(-1, hilbert_dim ** 2)
        rows = _gram_schmidt_rows(vecs, hilbert_dim, tol)
        basis = np.array(rows).reshape(-1, hilbert_dim, hilbert_dim)
        return cls(basis, tol)

    def __repr__(self):
        return f"OperatorAlgebra(hilbert_dim={self.hilbert_dim}, dim={self.dim})"

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def hilbert_dim(self) -> int:
        return self._basis.shape[1]

    @property
    def dim(self) -> int:
        return self._basis.shape[0]

    @cached_property
    def _rows(self) -> np.ndarray:
        return self._basis.reshape(self.dim, -1)

    @property
    def contains_identity(self) -> bool:
        return self.contains(np.eye(self.hilbert_dim))

    def generators(self) -> list[np.ndarray]:
        return list(self._basis)

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        """HS coordinates ``<e_i, x>`` of ``x`` on the stored basis."""
        return np.conj(self._rows) @ np.asarray(x, dtype=complex).reshape(-1)

    def project(self, x) -> np.ndarray:
        """HS-orthogonal projection of ``x`` onto the span of the algebra."""
        a = np.asarray(x, dtype=complex)
        if a.shape != (self.hilbert_dim, self.hilbert_dim):
            raise DimensionError(f"operator shape {a.shape} does not match algebra on C^{self.hilbert_dim}")
        return (self.coefficients(a) @ self._rows).reshape(a.shape)

    def residual(self, x) -> float:
        """Relative membership defect ``||x - P(x)|| / ||x||`` (0 for x = 0)."""
        a = np.asarray(x, dtype=complex)
        nrm = np.linalg.norm(a)
        if nrm == 0:
            return 0.0
        return float(np.linalg.norm(a - self.project(a)) / nrm)

    def contains(self, x, tol: Tolerances | None = None) -> bool:
        t = tol or self.tol
        return self.residual(x) <= t.eq_tol

    def basis_action(self, vec: np.ndarray) -> np.ndarray:
        """Matrix whose columns are ``e_i @ vec`` over the stored basis."""
        return np.einsum("ijk,k->ji", self._basis, np.asarray(vec, dtype=complex))

    def dense_basis(self) -> np.ndarray:
        return self._basis

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        c = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return np.tensordot(c, self._basis, axes=1)

    def random_hermitian(self, rng: np.random.Generator) -> np.ndarray:
        x = self.random_element(rng)
        return 0.5 * (x + dagger(x))

    def random_unitary(self, rng: np.random.Generator) -> np.ndarray:
        h = self.random_hermitian(rng)
        nrm = np.linalg.norm(h, 2)
        if nrm > 0:
            h = h * (np.pi / nrm)
        return expm_hermitian(h)

    @cached_property
    def _commutant(self) -> "OperatorAlgebra":
        null = commutation_nullspace(list(self._basis), self.tol)
        return OperatorAlgebra(np.array(null).reshape(-1, self.hilbert_dim, self.hilbert_dim), self.tol)

    def commutant(self) -> "OperatorAlgebra":
        return self._commutant

    @cached_property
    def _blocks(self) -> BlockDecomposition:
        return _block_decompose_generic(self, self.tol)

    def block_decomposition(self) -> BlockDecomposition:
        return self._blocks

    def closure_defect(self) -> float:
        """Largest residual of adjoints, pairwise products and 1 against the span."""
        worst = self.residual(np.eye(self.hilbert_dim))
        for i, e in enumerate(self._basis):
            worst = max(worst, self.residual(dagger(e)))
            prods = np.einsum("ab,jbc->jac", e, self._basis[i:])
            for p in prods:
                worst = max(worst, self.residual(p))
        return worst


def _site_permutation(dims: tuple[int, ...], order: Sequence[int]) -> np.ndarray:
    """Permutation matrix ``Pi`` with ``Pi @ psi`` = ``psi`` with tensor factors reordered."""
    n = int(np.prod(dims))
    eye = np.eye(n).reshape(dims + (n,))
    return eye.transpose(tuple(order) + (len(dims),)).reshape(n, n)


class TensorFactorAlgebra:
    """``B(H_S) (x) 1`` for a subset ``S`` of tensor sites with local dimensions ``dims``.

    Tensor factors follow ``numpy.kron`` order: site 0 is the most
    significant index. The implicit basis is the HS-normalized matrix units
    ``E_jk (x) 1 / sqrt(d_rest)`` in the site-reordered frame.
    """

    def __init__(self, dims: Sequence[int], sites, tol: Tolerances = DEFAULT_TOL):
        self.dims = tuple(int(d) for d in dims)
        self.sites = tuple(sorted(set(int(s) for s in sites)))
        if any(s < 0 or s >= len(self.dims) for s in self.sites):
            raise DimensionError(f"sites {self.sites} out of range for {len(self.dims)} factors")
        self.rest = tuple(i for i in range(len(self.dims)) if i not in self.sites)
        self.d_sites = int(np.prod([self.dims[i] for i in self.sites])) if self.sites else 1
        self.d_rest = int(np.prod([self.dims[i] for i in self.rest])) if self.rest else 1
        self.tol = tol
        self._order = self.sites + self.rest
        self._inverse = tuple(np.argsort(self._order))

    def __repr__(self):
        return f"TensorFactorAlgebra(dims={self.dims}, sites={self.sites})"

    @property
    def hilbert_dim(self) -> int:
        return self.d_sites * self.d_rest

    @property
    def dim(self) -> int:
        return self.d_sites ** 2

    def _to_frame(self, x: np.ndarray) -> np.ndarray:
        """Operator in the reordered frame as a (dS, dR, dS, dR) tensor."""
        k = len(self.dims)
        t = x.reshape(self.dims + self.dims)
        t = t.transpose(self._order + tuple(k + i for i in self._order))
        return t.reshape(self.d_sites, self.d_rest, self.d_sites, self.d_rest)

    def _from_frame(self, t: np.ndarray) -> np.ndarray:
        k = len(self.dims)
        permuted = tuple(self.dims[i] for i in self._order)
        t = t.reshape(permuted + permuted)
        t = t.transpose(self._inverse + tuple(k + i for i in self._inverse))
        return t.reshape(self.hilbert_dim, self.hilbert_dim)

    def reduce(self, x) -> np.ndarray:
        """Normalized partial trace of ``x`` onto the sites: ``Tr_rest(x) / d_rest``."""
        a = as_square(x)
        if a.shape[0] != self.hilbert_dim:
            raise DimensionError(f"operator on C^{a.shape[0]} vs algebra on C^{self.hilbert_dim}")
        return np.einsum("arbr->ab", self._to_frame(a)) / self.d_rest

    def embed(self, local: np.ndarray) -> np.ndarray:
        """``local (x) 1`` placed back into the original tensor order."""
        full = np.kron(np.asarray(local, dtype=complex), np.eye(self.d_rest))
        return self._from_frame(full)

    def project(self, x) -> np.ndarray:
        return self.embed(self.reduce(x))

    def residual(self, x) -> float:
        a = np.asarray(x, dtype=complex)
        nrm = np.linalg.norm(a)
        if nrm == 0:
            return 0.0
        return float(np.linalg.norm(a - self.project(a)) / nrm)

    def contains(self, x, tol: Tolerances | None = None) -> bool:
        t = tol or self.tol
        return self.residual(x) <= t.eq_tol

    def generators(self) -> list[np.ndarray]:
        """Shift and clock matrices on each site; together they generate the algebra."""
        gens = [np.eye(self.hilbert_dim, dtype=complex)]
        for s in self.sites:
            d = self.dims[s]
            shift = np.roll(np.eye(d), 1, axis=0)
            clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
            gens.append(self._local(shift, s))
            gens.append(self._local(clock, s))
        return gens

    def _local(self, op: np.ndarray, site: int) -> np.ndarray:
        out = np.array([[1.0 + 0j]])
        for i, d in enumerate(self.dims):
            out = np.kron(out, op if i == site else np.eye(d))
        return out

    def basis_action(self, vec: np.ndarray) -> np.ndarray:
        v = np.asarray(vec, dtype=complex).reshape(self.dims).transpose(self._order)
        psi = v.reshape(self.d_sites, self.d_rest)
        out = np.einsum("js,kr->jksr", np.eye(self.d_sites), psi) / np.sqrt(self.d_rest)
        permuted = tuple(self.dims[i] for i in self._order)
        out = out.reshape((self.d_sites ** 2,) + permuted)
        out = out.transpose((0,) + tuple(1 + i for i in self._inverse))
        return out.reshape(self.d_sites ** 2, self.hilbert_dim).T

    def dense_basis(self) -> np.ndarray:
        out = []
        for j in range(self.d_sites):
            for k in range(self.d_sites):
                e = np.zeros((self.d_sites, self.d_sites), dtype=complex)
                e[j, k] = 1.0
                out.append(self.embed(e) / np.sqrt(self.d_rest))
        return np.array(out)

    def random_hermitian(self, rng: np.random.Generator) -> np.ndarray:
        g = rng.standard_normal((self.d_sites,) * 2) + 1j * rng.standard_normal((self.d_sites,) * 2)
        return self.embed(0.5 * (g + dagger(g)))

    def random_unitary(self, rng: np.random.Generator) -> np.ndarray:
        return self.embed(random_unitary(self.d_sites, rng))

    def commutant(self) -> "TensorFactorAlgebra":
        return TensorFactorAlgebra(self.dims, self.rest, self.tol)

    @cached_property
    def _blocks(self) -> BlockDecomposition:
        w = dagger(_site_permutation(self.dims, self._order))
        return BlockDecomposition(w, ((self.d_sites, self.d_rest),), (np.eye(self.hilbert_dim, dtype=complex),))

    def block_decomposition(self) -> BlockDecomposition:
        return self._blocks

    def to_operator_algebra(self) -> OperatorAlgebra:
        return OperatorAlgebra(self.dense_basis(), self.tol)


Algebra = OperatorAlgebra | TensorFactorAlgebra


# ---------------------------------------------------------------------------
# constructors

def full_algebra(n: int, tol: Tolerances = DEFAULT_TOL) -> OperatorAlgebra:
    """All of B(C^n), matrix-unit basis."""
    return OperatorAlgebra(np.eye(n * n, dtype=complex).reshape(n * n, n, n), tol)


def scalar_algebra(n: int, tol: Tolerances = DEFAULT_TOL) -> OperatorAlgebra:
    return OperatorAlgebra((np.eye(n, dtype=complex) / np.sqrt(n))[None], tol)


def generate_algebra(generators: Sequence, hilbert_dim: int,
                     tol: Tolerances = DEFAULT_TOL) -> OperatorAlgebra:
    """Smallest unital *-algebra containing ``generators``.

    Grows the span by left-multiplying with generators and their adjoints
    until it stops growing. In finite dimensions the result is the double
    commutant of the generating set.
    """
    n = int(hilbert_dim)
    gens = []
    for g in generators:
        a = as_square(g, "generator")
        if a.shape[0] != n:
            raise DimensionError(f"generator of size {a.shape[0]} for Hilbert dimension {n}")
        gens.append(a)
    ext = gens + [dagger(g) for g in gens]
    seed = np.array([np.eye(n, dtype=complex).reshape(-1)] + [g.reshape(-1) for g in ext])
    basis = _gram_schmidt_rows(seed, n, tol)
    frontier = list(basis)
    steps = 0
    while frontier:
        steps += 1
        if steps > n * n:
            raise InternalConsistencyError(
                f"algebra generation did not stabilize within {n * n} growth steps"
            )
        cands = np.array([(g @ f.reshape(n, n)).reshape(-1) for f in frontier for g in ext]) \
            if ext else np.zeros((0, n * n), dtype=complex)
        new = _gram_schmidt_rows(cands, n, tol, start=np.array(basis)) if len(cands) else []
        basis.extend(new)
        frontier = new
    return OperatorAlgebra(np.array(basis).reshape(-1, n, n), tol)


def random_block_structure(n: int, rng: np.random.Generator, max_blocks: int | None = None) -> list[tuple[int, int]]:
    """Random list of ``(n_k, m_k)`` with ``sum n_k * m_k = n``."""
    blocks = []
    remaining = n
    while remaining > 0:
        if max_blocks is not None and len(blocks) == max_blocks - 1:
            size = remaining
        else:
            size = int(rng.integers(1, remaining + 1))
        divisors = [d for d in range(1, size + 1) if size % d == 0]
        n_k = int(rng.choice(divisors))
        blocks.append((n_k, size // n_k))
        remaining -= size
    return blocks


def algebra_from_structure(blocks: Sequence[tuple[int, int]], basis_change: np.ndarray,
                           rng: np.random.Generator, tol: Tolerances = DEFAULT_TOL) -> OperatorAlgebra:
    """Algebra ``W ((+)_k M_{n_k} (x) 1_{m_k}) W*`` generated from two random elements."""
    n = basis_change.shape[0]
    if sum(a * b for a, b in blocks) != n:
        raise DimensionError(f"block sizes {list(blocks)} do not fill C^{n}")
    gens = []
    for _ in range(2):
        parts = []
        for n_k, m_k in blocks:
            a = rng.standard_normal((n_k, n_k)) + 1j * rng.standard_normal((n_k, n_k))
            parts.append(np.kron(a, np.eye(m_k)))
        gens.append(basis_change @ _direct_sum(parts) @ dagger(basis_change))
    return generate_algebra(gens, n, tol)


def random_algebra(n: int, rng: np.random.Generator, blocks: Sequence[tuple[int, int]] | None = None,
                   tol: Tolerances = DEFAULT_TOL) -> OperatorAlgebra:
    """Random unitarily rotated algebra of the given (or a random) block structure."""
    structure = list(blocks) if blocks is not None else random_block_structure(n, rng)
    return algebra_from_structure(structure, random_unitary(n, rng), rng, tol)


def _direct_sum(parts: Sequence[np.ndarray]) -> np.ndarray:
    n = sum(p.shape[0] for p in parts)
    out = np.zeros((n, n), dtype=complex)
    o = 0
    for p in parts:
        k = p.shape[0]
        out[o:o + k, o:o + k] = p
        o += k
    return out


# ---------------------------------------------------------------------------
# operations

def _check_same_space(m, n):
    if m.hilbert_dim != n.hilbert_dim:
        raise DimensionError(f"algebras act on C^{m.hilbert_dim} and C^{n.hilbert_dim}")


def _as_operator_algebra(m) -> OperatorAlgebra:
    return m if isinstance(m, OperatorAlgebra) else m.to_operator_algebra()


def commutant(m):
    return m.commutant()


def intersection(m, n):
    """Intersection of two algebras (again a von Neumann algebra)."""
    _check_same_space(m, n)
    if isinstance(m, TensorFactorAlgebra) and isinstance(n, TensorFactorAlgebra) and m.dims == n.dims:
        return TensorFactorAlgebra(m.dims, set(m.sites) & set(n.sites), m.tol)
    a, b = _as_operator_algebra(m), _as_operator_algebra(n)
    rows = subspace_intersection(a._rows, b._rows, a.tol)
    return OperatorAlgebra(rows.reshape(-1, a.hilbert_dim, a.hilbert_dim), a.tol)


def center(m):
    return intersection(m, m.commutant())


def is_factor(m) -> bool:
    return center(m).dim == 1


def join(m, n):
    """Von Neumann algebra generated by two algebras on the same space."""
    _check_same_space(m, n)
    if isinstance(m, TensorFactorAlgebra) and isinstance(n, TensorFactorAlgebra) and m.dims == n.dims:
        return TensorFactorAlgebra(m.dims, set(m.sites) | set(n.sites), m.tol)
    gens = list(_as_operator_algebra(m).basis) + list(_as_operator_algebra(n).basis)
    return generate_algebra(gens, m.hilbert_dim, m.tol)


def containment_defect(m, n) -> float:
    """Largest residual of a generator of ``n`` against ``m`` (0 iff n is inside m)."""
    _check_same_space(m, n)
    return max(m.residual(g) for g in n.generators())


def equality_residual(m, n) -> float:
    return max(containment_defect(m, n), containment_defect(n, m))


def equals_algebra(m, n, tol: Tolerances | None = None) -> bool:
    t = tol or m.tol
    return equality_residual(m, n) <= t.eq_tol


def contains_operator(m, x, tol: Tolerances | None = None) -> bool:
    a = as_square(x)
    if a.shape[0] != m.hilbert_dim:
        raise DimensionError(f"operator on C^{a.shape[0]} vs algebra on C^{m.hilbert_dim}")
    return m.contains(a, tol)


def conditional_expectation(m, x) -> np.ndarray:
    """Trace-preserving conditional expectation onto ``m`` (HS-orthogonal projection)."""
    a = as_square(x)
    if a.shape[0] != m.hilbert_dim:
        raise DimensionError(f"operator on C^{a.shape[0]} vs algebra on C^{m.hilbert_dim}")
    return m.project(a)


def block_decompose(m) -> BlockDecomposition:
    return m.block_decomposition()


def commutation_defect(m, n) -> tuple[float, tuple[int, int] | None]:
    """Largest normalized commutator between generators of two algebras and the offending pair."""
    _check_same_space(m, n)
    worst, pair = 0.0, None
    gm, gn = m.generators(), n.generators()
    for i, a in enumerate(gm):
        na = np.linalg.norm(a)
        for j, b in enumerate(gn):
            c = np.linalg.norm(a @ b - b @ a) / (na * np.linalg.norm(b))
            if c > worst:
                worst, pair = float(c), (i, j)
    return worst, pair


# ---------------------------------------------------------------------------
# Artin-Wedderburn decomposition

def _cluster(values: np.ndarray, gap: float) -> list[np.ndarray]:
    """Group sorted eigenvalues whose consecutive differences are below ``gap``."""
    groups, current = [], [0]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] <= gap:
            current.append(i)
        else:
            groups.append(np.array(current))
            current = [i]
    groups.append(np.array(current))
    return groups


def _cluster_gap(evals: np.ndarray, tol: Tolerances) -> float:
    spread = max(1.0, float(np.max(np.abs(evals))))
    return np.sqrt(tol.rank_tol) * spread


def _block_decompose_generic(m: OperatorAlgebra, tol: Tolerances, seed: int = 0) -> BlockDecomposition:
    n = m.hilbert_dim
    rng = np.random.default_rng(seed)
    z = center(m)
    h = z.random_hermitian(rng)
    evals, evecs = np.linalg.eigh(h)
    columns, blocks, projections = [], [], []
    for group in _cluster(evals, _cluster_gap(evals, tol)):
        v = evecs[:, group]
        d_k = v.shape[1]
        compressed = OperatorAlgebra.from_spanning_set(
            [dagger(v) @ e @ v for e in m.basis], d_k, tol)
        a = compressed.random_hermitian(rng)
        w, f = np.linalg.eigh(a)
        sub = _cluster(w, _cluster_gap(w, tol))
        n_k = len(sub)
        m_k = d_k // n_k
        if n_k * m_k != d_k or any(len(s) != m_k for s in sub) or compressed.dim != n_k * n_k:
            raise InternalConsistencyError(
                f"central block of size {d_k} is not a factor M_{n_k} (x) 1_{m_k} "
                f"(span dimension {compressed.dim})"
            )
        f1 = f[:, sub[0]]
        cols = [f1]
        b = compressed.random_element(rng)
        for s in sub[1:]:
            fj = f[:, s]
            t = dagger(fj) @ b @ f1
            c = np.sqrt(np.real(np.trace(dagger(t) @ t)) / m_k)
            if c < np.sqrt(tol.rank_tol):
                raise InternalConsistencyError("matrix-unit construction degenerated")
            cols.append(fj @ (t / c))
        w_k = np.hstack(cols)
        columns.append(v @ w_k)
        blocks.append((n_k, m_k))
        projections.append(v @ dagger(v))
    w_full = np.hstack(columns)
    dec = BlockDecomposition(w_full, tuple(blocks), tuple(projections))
    defect = block_structure_defect(dec, m.basis)
    if defect > tol.eq_tol:
        raise InternalConsistencyError(f"block structure verification failed (defect {defect:.3e})")
    return dec


def block_structure_defect(dec: BlockDecomposition, ops) -> float:
    """Largest HS distance of ``W* x W`` from the form ``(+)_k A_k (x) 1_{m_k}``."""
    w = dec.basis_change
    worst = 0.0
    for x in ops:
        y = dagger(w) @ x @ w
        target = np.zeros_like(y)
        for sl, (n_k, m_k) in zip(dec.block_slices(), dec.blocks):
            blk = y[sl, sl].reshape(n_k, m_k, n_k, m_k)
            a_k = np.einsum("isjs->ij", blk) / m_k
            target[sl, sl] = np.kron(a_k, np.eye(m_k))
        worst = max(worst, float(np.linalg.norm(y - target)))
    return worst


def commutant_from_blocks(dec: BlockDecomposition, tol: Tolerances = DEFAULT_TOL) -> OperatorAlgebra:
    """``W ((+)_k 1_{n_k} (x) M_{m_k}) W*`` built directly from block data."""
    w = dec.basis_change
    n = w.shape[0]
    ops = []
    for sl, (n_k, m_k) in zip(dec.block_slices(), dec.blocks):
        for a in range(m_k):
            for b in range(m_k):
                e = np.zeros((m_k, m_k), dtype=complex)
                e[a, b] = 1.0
                full = np.zeros((n, n), dtype=complex)
                full[sl, sl] = np.kron(np.eye(n_k), e)
                ops.append(w @ full @ dagger(w))
    return OperatorAlgebra.from_spanning_set(ops, n, tol)
