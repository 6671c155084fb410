"""Pauli operators with exact phases and pure stabilizer states.

Sign convention: a :class:`Pauli` is ``i**phase * X^x Z^z`` where on every
qubit the X factor stands to the left of the Z factor (so ``Y = i X Z`` has
``x = z = 1, phase = 1``). Qubit 0 is the most significant tensor factor.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import gf2


@dataclass(frozen=True, eq=False)
class Pauli:
    x: np.ndarray
    z: np.ndarray
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", gf2.as_bits(self.x))
        object.__setattr__(self, "z", gf2.as_bits(self.z))
        object.__setattr__(self, "phase", int(self.phase) % 4)
        if self.x.shape != self.z.shape or self.x.ndim != 1:
            raise ValueError("x and z must be 1-d bit vectors of one length")

    @classmethod
    def identity(cls, n: int) -> "Pauli":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def hermitian(cls, x, z, sign: int = 1) -> "Pauli":
        """``sign * i^(x.z) X^x Z^z``, the Hermitian Pauli with these bits."""
        xb, zb = gf2.as_bits(x), gf2.as_bits(z)
        k = int(np.dot(xb.astype(int), zb.astype(int))) + (0 if sign == 1 else 2)
        return cls(xb, zb, k)

    @classmethod
    def from_label(cls, label: str) -> "Pauli":
        x = np.array([c in "XY" for c in label], np.uint8)
        z = np.array([c in "ZY" for c in label], np.uint8)
        return cls(x, z, int(np.sum(x & z)))

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def bits(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])

    def __mul__(self, other: "Pauli") -> "Pauli":
        k = self.phase + other.phase + 2 * int(np.dot(self.z.astype(int), other.x.astype(int)))
        return Pauli(self.x ^ other.x, self.z ^ other.z, k)

    def __eq__(self, other):
        return (isinstance(other, Pauli) and self.phase == other.phase
                and np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def __hash__(self):
        return hash((self.x.tobytes(), self.z.tobytes(), self.phase))

    def __neg__(self) -> "Pauli":
        return Pauli(self.x, self.z, self.phase + 2)

    def symplectic(self, other: "Pauli") -> int:
        """0 if the operators commute, 1 if they anticommute."""
        return int(np.dot(self.x.astype(int), other.z.astype(int)) + np.dot(self.z.astype(int), other.x.astype(int))) % 2

    def commutes(self, other: "Pauli") -> bool:
        return self.symplectic(other) == 0

    def is_hermitian(self) -> bool:
        return (self.phase - int(np.dot(self.x.astype(int), self.z.astype(int)))) % 2 == 0

    def sign(self) -> int:
        """For a Hermitian Pauli, the ``s`` in ``s * i^(x.z) X^x Z^z``."""
        if not self.is_hermitian():
            raise ValueError("sign is only defined for Hermitian Paulis")
        d = (self.phase - int(np.dot(self.x.astype(int), self.z.astype(int)))) % 4
        return 1 if d == 0 else -1

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.x | self.z)

    def supported_in(self, mask: np.ndarray) -> bool:
        return not np.any((self.x | self.z) & ~np.asarray(mask, bool))

    def label(self) -> str:
        chars = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
        body = "".join(chars[(int(a), int(b))] for a, b in zip(self.x, self.z))
        k = (self.phase - int(np.sum(self.x & self.z))) % 4
        return ["+", "+i", "-", "-i"][k] + body

    def apply_dense(self, vec: np.ndarray) -> np.ndarray:
        """Action on a state vector in the computational basis (qubit 0 most significant)."""
        n = self.n
        idx = np.arange(2 ** n)
        weights = 1 << np.arange(n - 1, -1, -1)
        xm = int(np.dot(self.x.astype(np.int64), weights))
        zm = int(np.dot(self.z.astype(np.int64), weights))
        parity = np.bitwise_count(idx & zm) & 1
        out = np.zeros_like(vec, dtype=complex)
        out[idx ^ xm] = (1j ** self.phase) * np.where(parity, -1.0, 1.0) * vec
        return out

    def to_dense(self) -> np.ndarray:
        n = self.n
        return np.array([self.apply_dense(col) for col in np.eye(2 ** n, dtype=complex)]).T


def _product(paulis: Sequence[Pauli], coeffs: np.ndarray, n: int) -> Pauli:
    out = Pauli.identity(n)
    for c, p in zip(coeffs, paulis):
        if c:
            out = out * p
    return out


class StabilizerState:
    """Pure stabilizer state given by ``n`` independent commuting Hermitian generators."""

    def __init__(self, generators: Sequence[Pauli], check: bool = True):
        self.generators = tuple(generators)
        if not self.generators:
            raise ValueError("need at least one generator")
        self.n = self.generators[0].n
        if check:
            self.validate()

    def validate(self):
        if len(self.generators) != self.n:
            raise ValueError(f"{len(self.generators)} generators for {self.n} qubits")
        for g in self.generators:
            if not g.is_hermitian():
                raise ValueError(f"generator {g.label()} is not Hermitian")
        sm = symplectic_gram(self.generators)
        if np.any(sm):
            i, j = np.argwhere(sm)[0]
            raise ValueError(f"generators {i} and {j} anticommute")
        if gf2.rank(self.bit_matrix) != self.n:
            raise ValueError("generators are not independent")

    @property
    def bit_matrix(self) -> np.ndarray:
        return np.array([g.bits for g in self.generators], dtype=np.uint8)

    def apply(self, p: Pauli) -> "StabilizerState":
        """``p |S>``; generators anticommuting with ``p`` flip sign."""
        return StabilizerState([-g if not g.commutes(p) else g for g in self.generators], check=False)

    def decompose(self, p: Pauli) -> np.ndarray | None:
        """Coefficients expressing ``p``'s bits through the generators, or ``None``."""
        return gf2.solve(self.bit_matrix.T, p.bits)

    def expectation(self, p: Pauli) -> complex:
        """Exact ``<S|p|S>``: 0 unless ``p`` is proportional to a stabilizer element."""
        if any(not p.commutes(g) for g in self.generators):
            return 0
        c = self.decompose(p)
        if c is None:
            return 0
        prod = _product(self.generators, c, self.n)
        return 1j ** ((p.phase - prod.phase) % 4)

    def subgroup_in(self, mask: np.ndarray) -> list[Pauli]:
        """Generators of the stabilizer elements supported inside ``mask``."""
        mask = np.asarray(mask, bool)
        outside = np.concatenate([~mask, ~mask])
        a = self.bit_matrix
        coeffs = gf2.nullspace(a[:, outside].T)
        return [_product(self.generators, c, self.n) for c in coeffs]

    def canonical_form(self) -> tuple:
        return canonical_generators(self.generators)

    def same_state(self, other: "StabilizerState") -> bool:
        return self.canonical_form() == other.canonical_form()


def symplectic_gram(paulis: Sequence[Pauli]) -> np.ndarray:
    m = np.array([[p.symplectic(q) for q in paulis] for p in paulis], dtype=np.uint8)
    return m


def canonical_generators(paulis: Sequence[Pauli]) -> tuple:
    """Row-reduced, sign-tracked normal form of the group generated by commuting Hermitian Paulis.

    Returns a tuple of ``(x bits, z bits, sign)`` rows; two generating sets
    give the same tuple iff they generate the same signed group.
    """
    rows = [p for p in paulis]
    if not rows:
        return ()
    n = rows[0].n
    r = 0
    for c in range(2 * n):
        pivot = next((i for i in range(r, len(rows)) if rows[i].bits[c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i].bits[c]:
                rows[i] = rows[i] * rows[r]
        r += 1
        if r == len(rows):
            break
    out = []
    for p in rows[:r]:
        out.append((tuple(int(b) for b in p.x), tuple(int(b) for b in p.z), p.sign()))
    return tuple(out)


def overlap_magnitude(s1: StabilizerState, s2: StabilizerState) -> float:
    """``|<S1|S2>|``: 0 if a shared element has opposite signs, else ``2^(-k/2)``."""
    a1, a2 = s1.bit_matrix, s2.bit_matrix
    n = s1.n
    stacked = np.vstack([a1, a2])
    combos = gf2.nullspace(stacked.T)
    for c in combos:
        p1 = _product(s1.generators, c[:n], n)
        p2 = _product(s2.generators, c[n:], n)
        if p1.sign() != p2.sign():
            return 0.0
    k = gf2.rank(stacked) - n
    return float(2.0 ** (-k / 2))


@dataclass(frozen=True)
class MarginalSignature:
    """Canonical signed generating set of the stabilizer elements inside a region."""

    region: tuple
    rows: tuple

    def __len__(self):
        return len(self.rows)


def marginal_signature(state: StabilizerState, mask: np.ndarray) -> MarginalSignature:
    mask = np.asarray(mask, bool)
    return MarginalSignature(tuple(np.flatnonzero(mask).tolist()),
                             canonical_generators(state.subgroup_in(mask)))


def signature_detector(state1: StabilizerState, state2: StabilizerState, mask) -> Pauli | None:
    """A region-supported stabilizer of ``state1`` whose value differs in ``state2``."""
    for p in state1.subgroup_in(np.asarray(mask, bool)):
        if state2.expectation(p) != 1:
            return p
    return None


def pauli_connectivity(s1: StabilizerState, s2: StabilizerState, mask) -> tuple[bool, Pauli | None]:
    """Find a Pauli supported in ``mask`` mapping ``s1`` to ``s2`` up to a global phase."""
    mask = np.asarray(mask, bool)
    n = s1.n
    if gf2.rank(np.vstack([s1.bit_matrix, s2.bit_matrix])) != n:
        return False, None
    flips = np.array([0 if s2.expectation(g) == 1 else 1 for g in s1.generators], np.uint8)
    idx = np.flatnonzero(mask)
    # <Q, g> = Q_x . g_z + Q_z . g_x with Q supported on idx
    a = np.array([np.concatenate([g.z[idx], g.x[idx]]) for g in s1.generators], np.uint8)
    sol = gf2.solve(a, flips)
    if sol is None:
        return False, None
    qx = np.zeros(n, np.uint8)
    qz = np.zeros(n, np.uint8)
    qx[idx] = sol[: idx.size]
    qz[idx] = sol[idx.size:]
    q = Pauli.hermitian(qx, qz)
    if not s1.apply(q).same_state(s2):
        raise RuntimeError("connectivity solution failed verification")
    return True, q


def stabilizer_reduced_density(state: StabilizerState, mask) -> np.ndarray:
    """``2^-|R| sum_{s in S_R} s`` restricted to the region (dense, small regions only)."""
    mask = np.asarray(mask, bool)
    idx = np.flatnonzero(mask)
    gens = state.subgroup_in(mask)
    r = idx.size
    rho = np.zeros((2 ** r, 2 ** r), dtype=complex)
    k = len(gens)
    for bits in range(2 ** k):
        coeffs = [(bits >> i) & 1 for i in range(k)]
        p = _product(gens, coeffs, state.n)
        local = Pauli(p.x[idx], p.z[idx], p.phase)
        rho += local.to_dense()
    return rho / 2 ** r
