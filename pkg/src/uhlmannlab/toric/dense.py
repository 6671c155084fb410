"""Dense state-vector engine for small tori, used to cross-check the stabilizer engine."""
from __future__ import annotations

import numpy as np

from .. import algebra as alg
from ..duality import build_intertwiner, check_haag_duality
from ..numerics import DEFAULT_TOL, Tolerances
from . import gf2
from .lattice import GeometryError, Lattice, ground_state
from .stabilizer import (
    Pauli,
    StabilizerState,
    _product,
    overlap_magnitude,
    pauli_connectivity,
    stabilizer_reduced_density,
)

MAX_DENSE_QUBITS = 16
LOGICAL_SECTORS = ((1, 1), (-1, 1), (1, -1), (-1, -1))


class QubitCapError(ValueError):
    """Dense engine requested above the qubit cap."""


def _check_cap(n: int):
    if n > MAX_DENSE_QUBITS:
        raise QubitCapError(f"dense engine limited to {MAX_DENSE_QUBITS} qubits, got {n}")


def reference_index(state: StabilizerState) -> int:
    """A computational basis index with nonzero overlap with the state.

    Every Z-only stabilizer element must act as +1 on it, which is a GF(2)
    linear system for the bits.
    """
    n = state.n
    bm = state.bit_matrix
    coeffs = gf2.nullspace(bm[:, :n].T)
    rows, rhs = [], []
    for c in coeffs:
        p = _product(state.generators, c, n)
        rows.append(p.z)
        rhs.append(0 if p.sign() == 1 else 1)
    if not rows:
        return 0
    bits = gf2.solve(np.array(rows), np.array(rhs))
    if bits is None:
        raise RuntimeError("inconsistent Z-type stabilizer signs")
    return int(np.dot(bits.astype(np.int64), 1 << np.arange(n - 1, -1, -1)))


def dense_state(state: StabilizerState) -> np.ndarray:
    """Normalized projection of a reference basis vector through ``prod (1 + g) / 2``.

    The global phase is fixed so the largest amplitude is real positive.
    """
    _check_cap(state.n)
    vec = np.zeros(2 ** state.n, dtype=complex)
    vec[reference_index(state)] = 1.0
    for g in state.generators:
        vec = 0.5 * (vec + g.apply_dense(vec))
    nrm = np.linalg.norm(vec)
    if nrm < 1e-6:
        raise RuntimeError("reference vector is orthogonal to the stabilizer state")
    vec /= nrm
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def dense_ground_state(lat: Lattice, logical_sector: tuple[int, int] = (1, 1)) -> np.ndarray:
    _check_cap(lat.n_qubits)
    return dense_state(ground_state(lat, logical_sector))


def dense_reduced_density(vec: np.ndarray, mask, n: int) -> np.ndarray:
    """Reduced density matrix of an ``n``-qubit vector on the qubits in ``mask`` (in index order)."""
    keep = np.flatnonzero(np.asarray(mask, bool))
    drop = np.setdiff1d(np.arange(n), keep)
    t = np.asarray(vec, dtype=complex).reshape((2,) * n).transpose(tuple(keep) + tuple(drop))
    m = t.reshape(2 ** keep.size, 2 ** drop.size)
    return m @ np.conj(m).T


def operator_schmidt_rank(op: np.ndarray, dims: tuple[int, int], tol: float = 1e-9) -> tuple[int, np.ndarray]:
    """Operator-Schmidt rank of ``op`` on C^a (x) C^b via the realigned matrix."""
    a, b = dims
    t = np.asarray(op).reshape(a, b, a, b).transpose(0, 2, 1, 3).reshape(a * a, b * b)
    s = np.linalg.svd(t, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0]))), s


def _sample_paulis(n: int, rng: np.random.Generator, count: int) -> list[Pauli]:
    out = []
    for _ in range(count):
        x = rng.integers(0, 2, n)
        z = rng.integers(0, 2, n)
        out.append(Pauli.hermitian(x, z))
    return out


def dense_cross_check(L: int = 2, a_edges=None, seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Compare both engines at small L and run the duality module on the edge tensor split.

    ``a_edges`` defaults to ``[h(0,0), v(1,0)]``, split as A1 = first edge,
    A2 = the rest. The excited state applies the e-string along those edges.
    """
    lat = Lattice(L)
    n = lat.n_qubits
    _check_cap(n)
    if a_edges is None:
        a_edges = [lat.h(0, 0), lat.v(1, 0)]
    a_edges = sorted(int(e) for e in a_edges)
    if len(a_edges) < 2:
        raise GeometryError("region A needs at least two edges for the A1|A2 split")
    a_mask = np.zeros(n, bool)
    a_mask[a_edges] = True
    b_mask = ~a_mask
    rng = np.random.default_rng(seed)

    ground = ground_state(lat)
    zero = np.zeros(n, np.uint8)
    z_bits = zero.copy()
    z_bits[a_edges] = 1
    excitation = Pauli(zero, z_bits)
    excited = ground.apply(excitation)
    sectors = {f"logical{s}": ground_state(lat, s) for s in LOGICAL_SECTORS}
    sectors["1"] = sectors.pop("logical(1, 1)")
    sectors["excited"] = excited
    dense = {k: dense_state(s) for k, s in sectors.items()}

    # overlaps
    keys = list(sectors)
    gram_stab = np.array([[overlap_magnitude(sectors[a], sectors[b]) for b in keys] for a in keys])
    gram_dense = np.abs(np.array([[np.vdot(dense[a], dense[b]) for b in keys] for a in keys]))
    gram_dev = float(np.max(np.abs(gram_stab - gram_dense)))

    # expectations of stabilizers, logicals and random Paulis
    probes = [lat.star(v) for v in lat.vertices()] + [lat.plaquette(f) for f in lat.faces()]
    probes += list(lat.logical_z()) + list(lat.logical_x()) + _sample_paulis(n, rng, 32)
    exp_dev = 0.0
    for k in keys:
        for p in probes:
            stab = sectors[k].expectation(p)
            den = np.vdot(dense[k], p.apply_dense(dense[k]))
            exp_dev = max(exp_dev, abs(stab - den))

    # marginals on B
    rho_dev = 0.0
    for k in ("1", "excited"):
        r_stab = stabilizer_reduced_density(sectors[k], b_mask)
        r_dense = dense_reduced_density(dense[k], b_mask, n)
        rho_dev = max(rho_dev, float(np.max(np.abs(r_stab - r_dense))))

    psi, phi = dense["1"], dense["excited"]
    dims = [2] * n
    m_a = alg.TensorFactorAlgebra(dims, a_edges, tol)
    m_b = alg.TensorFactorAlgebra(dims, np.flatnonzero(b_mask), tol)
    haag = check_haag_duality(m_a, m_b, tol)
    b_marg_dev = float(np.max(np.abs(dense_reduced_density(psi, b_mask, n) - dense_reduced_density(phi, b_mask, n))))
    iso = build_intertwiner(m_b, psi, phi, m_b=m_a, tol=tol)
    local_v = m_a.reduce(iso.v)
    rank, svals = operator_schmidt_rank(local_v, (2, 2 ** (len(a_edges) - 1)), tol.eq_tol)
    feasible, connecting = pauli_connectivity(sectors["1"], excited, a_mask)
    return {
        "L": L,
        "n_qubits": n,
        "A_edges": a_edges,
        "engine_agreement": {
            "gram_max_dev": gram_dev,
            "expectation_max_dev": float(exp_dev),
            "rho_B_max_dev": rho_dev,
        },
        "logical_sector_gram": gram_dense[:4, :4].tolist(),
        "haag_duality": {"passed": haag.passed, "residual": haag.residual},
        "B_marginal_dev": b_marg_dev,
        "intertwiner": {
            "map_residual": iso.map_residual,
            "intertwiner_residual": iso.intertwiner_residual,
            "in_MA": iso.in_mb,
            "in_MA_residual": iso.in_mb_residual,
            "isometry_residual": iso.isometry_residual,
        },
        "operator_schmidt_rank_A1_A2": rank,
        "operator_schmidt_values": svals.tolist(),
        "pauli_connectivity_A": {
            "feasible": feasible,
            "operator": connecting.label() if connecting is not None else None,
        },
        "_objects": {"psi": psi, "phi": phi, "v": iso.v, "m_a": m_a, "m_b": m_b},
    }
