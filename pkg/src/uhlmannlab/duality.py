"""Bipartition criteria: local tomography, Haag duality and the Uhlmann property.

The maximal overlap ``sup |<psi, b phi>|`` over contractions ``b`` of an
algebra is computed in closed form from its block decomposition: each block
contributes the trace norm of the multiplicity-traced transition operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra as alg
from .numerics import (
    DEFAULT_TOL,
    InternalConsistencyError,
    Tolerances,
    dagger,
    expm_hermitian,
    polar_decompose,
    random_state,
    trace_norm,
)
from .states import marginals_equal


class PreconditionError(ValueError):
    """An operation was called outside its domain (non-commuting algebras, unequal marginals)."""


class NonCommutingError(PreconditionError):
    def __init__(self, defect: float, pair):
        super().__init__(f"algebras do not commute: generator pair {pair} has relative commutator {defect:.3e}")
        self.defect = defect
        self.pair = pair


class TheoremViolationError(RuntimeError):
    """Haag duality and the Uhlmann property disagreed; in finite dimensions this is a bug."""


@dataclass
class Verdict:
    passed: bool
    residual: float
    details: dict = field(default_factory=dict)


@dataclass
class Witness:
    """Equal-marginal pair that no unitary of ``M_B`` connects."""

    psi: np.ndarray
    phi: np.ndarray
    max_overlap: float
    connecting_unitary: np.ndarray
    location: str


@dataclass
class CheckReport:
    local_tomography: Verdict
    haag_duality: Verdict
    factors: dict
    witnesses: list
    tolerances: Tolerances


@dataclass
class OverlapResult:
    value: float
    optimizer: np.ndarray
    attained: float
    optimizer_residual: float


@dataclass
class PartialIsometryResult:
    v: np.ndarray
    intertwiner_residual: float
    commutant_residual: float
    map_residual: float
    isometry_residual: float
    in_mb: bool | None = None
    in_mb_residual: float | None = None


@dataclass
class UhlmannPairResult:
    verdict: str
    marginals_equal: bool
    marginal_deviation: float
    max_overlap: float
    optimizer: np.ndarray
    intertwiner: PartialIsometryResult | None


@dataclass
class TheoremReport:
    haag_duality: Verdict
    consistent: bool
    samples: list = field(default_factory=list)
    witness: Witness | None = None
    overlaps: list = field(default_factory=list)


def require_commuting(m_a, m_b, tol: Tolerances = DEFAULT_TOL) -> float:
    defect, pair = alg.commutation_defect(m_a, m_b)
    if defect > tol.eq_tol:
        raise NonCommutingError(defect, pair)
    return defect


def _full_like(m):
    if isinstance(m, alg.TensorFactorAlgebra):
        return alg.TensorFactorAlgebra(m.dims, range(len(m.dims)), m.tol)
    return alg.full_algebra(m.hilbert_dim, m.tol)


def check_local_tomography(m_a, m_b, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Does ``M_A v M_B`` exhaust B(H)?

    Also reports the equivalent relative-commutant form and whether each
    algebra is a factor (both necessary for tomography).
    """
    require_commuting(m_a, m_b, tol)
    joined = alg.join(m_a, m_b)
    residual = alg.containment_defect(joined, _full_like(m_a))
    relative = alg.intersection(m_a.commutant(), m_b.commutant())
    details = {
        "join_dim": joined.dim,
        "full_dim": m_a.hilbert_dim ** 2,
        "relative_commutant_dim": relative.dim,
        "factor_A": alg.is_factor(m_a),
        "factor_B": alg.is_factor(m_b),
    }
    return Verdict(residual <= tol.eq_tol, residual, details)


def check_haag_duality(m_a, m_b, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Is ``M_B`` the full commutant of ``M_A``? Residual is the worse containment defect."""
    require_commuting(m_a, m_b, tol)
    comm = m_a.commutant()
    b_in_comm = alg.containment_defect(comm, m_b)
    comm_in_b = alg.containment_defect(m_b, comm)
    residual = max(b_in_comm, comm_in_b)
    details = {
        "dim_B": m_b.dim,
        "dim_A_commutant": comm.dim,
        "B_in_A_commutant_defect": b_in_comm,
        "A_commutant_in_B_defect": comm_in_b,
    }
    return Verdict(residual <= tol.eq_tol, residual, details)


def max_overlap(m_b, psi, phi, tol: Tolerances = DEFAULT_TOL) -> OverlapResult:
    """``sup |<psi, b phi>|`` over contractions ``b`` in ``m_b``, with a unitary optimizer."""
    a = np.asarray(psi, dtype=complex)
    b = np.asarray(phi, dtype=complex)
    n = m_b.hilbert_dim
    if a.shape != (n,) or b.shape != (n,):
        raise alg.DimensionError(f"states must live on C^{n}")
    dec = m_b.block_decomposition()
    w = dec.basis_change
    transition = dagger(w) @ np.outer(b, np.conj(a)) @ w
    value = 0.0
    parts = []
    for sl, (n_k, m_k) in zip(dec.block_slices(), dec.blocks):
        y = np.einsum("isjs->ij", transition[sl, sl].reshape(n_k, m_k, n_k, m_k))
        value += trace_norm(y)
        u, _ = polar_decompose(y)
        parts.append(np.kron(dagger(u), np.eye(m_k)))
    optimizer = w @ alg._direct_sum(parts) @ dagger(w)
    attained = float(abs(np.vdot(a, optimizer @ b)))
    opt_res = m_b.residual(optimizer)
    if abs(attained - value) > tol.eq_tol or opt_res > tol.eq_tol:
        raise InternalConsistencyError(
            f"overlap optimizer check failed: attained {attained}, value {value}, membership {opt_res:.3e}"
        )
    return OverlapResult(value, optimizer, attained, opt_res)


def build_intertwiner(m_a, psi, phi, m_b=None, tol: Tolerances = DEFAULT_TOL) -> PartialIsometryResult:
    """Partial isometry ``v`` with ``v a psi = a phi`` for all ``a`` in ``m_a``, zero off ``[M_A psi]``."""
    a = np.asarray(psi, dtype=complex)
    b = np.asarray(phi, dtype=complex)
    equal, dev = marginals_equal(a, b, m_a, tol.eq_tol)
    if not equal:
        raise PreconditionError(f"marginals differ on M_A (max deviation {dev:.3e}); no isometric intertwiner")
    k = m_a.basis_action(a)
    l = m_a.basis_action(b)
    u, s, vh = np.linalg.svd(k, full_matrices=False)
    r = int(np.sum(s > tol.rank_tol * s[0]))
    k_pinv = dagger(vh[:r]) @ np.diag(1.0 / s[:r]) @ dagger(u[:, :r])
    v = l @ k_pinv
    inter = float(np.max(np.linalg.norm(v @ k - l, axis=0)))
    if inter > 10 * np.sqrt(tol.eq_tol):
        raise InternalConsistencyError(f"intertwiner least squares residual {inter:.3e}")
    vv = dagger(v) @ v
    iso = float(np.linalg.norm(vv @ vv - vv))
    result = PartialIsometryResult(
        v=v,
        intertwiner_residual=inter,
        commutant_residual=m_a.commutant().residual(v),
        map_residual=float(np.linalg.norm(v @ a - b)),
        isometry_residual=iso,
    )
    if m_b is not None:
        result.in_mb_residual = m_b.residual(v)
        result.in_mb = result.in_mb_residual <= tol.eq_tol
    return result


def check_uhlmann_pair(m_a, m_b, psi, phi, tol: Tolerances = DEFAULT_TOL) -> UhlmannPairResult:
    require_commuting(m_a, m_b, tol)
    equal, dev = marginals_equal(psi, phi, m_a, tol.eq_tol)
    ov = max_overlap(m_b, psi, phi, tol)
    if not equal:
        return UhlmannPairResult("vacuous", False, dev, ov.value, ov.optimizer, None)
    iso = build_intertwiner(m_a, psi, phi, m_b, tol)
    verdict = "pass" if ov.value >= 1.0 - tol.eq_tol else "fail"
    return UhlmannPairResult(verdict, True, dev, ov.value, ov.optimizer, iso)


def _complement_unitaries(m_a, m_b, tol: Tolerances):
    """Unitaries in ``M_A'`` that are not in ``M_B``, largest defect first."""
    comm = m_a.commutant()
    cands = []
    for e in comm.generators():
        y = e - m_b.project(e)
        for h in (0.5 * (y + dagger(y)), 0.5j * (dagger(y) - y)):
            nrm = np.linalg.norm(h)
            if nrm > np.sqrt(tol.eq_tol):
                cands.append((nrm, h))
    cands.sort(key=lambda t: -t[0])
    for _, h in cands:
        evals, evecs = np.linalg.eigh(h)
        # unitary polar part of a Hermitian element, +1 on its kernel
        reflection = (evecs * np.where(evals >= 0, 1.0, -1.0)) @ dagger(evecs)
        rotation = expm_hermitian(h * (np.pi / 2 / max(np.abs(evals))))
        for w in (reflection, rotation):
            if comm.residual(w) <= tol.eq_tol and m_b.residual(w) > tol.eq_tol:
                yield w, m_b.residual(w)


def find_counterexample(m_a, m_b, seed: int = 0, samples: int = 20,
                        tol: Tolerances = DEFAULT_TOL) -> Witness | None:
    """Equal-marginal pair with sub-unit maximal overlap, or ``None`` under Haag duality."""
    if check_haag_duality(m_a, m_b, tol).passed:
        return None
    n = m_a.hilbert_dim
    for w, defect in _complement_unitaries(m_a, m_b, tol):
        for i in range(samples):
            rng = np.random.default_rng([seed, i])
            psi = random_state(n, rng)
            phi = w @ psi
            ov = max_overlap(m_b, psi, phi, tol)
            if ov.value < 1.0 - tol.eq_tol:
                loc = f"in commutant(M_A), not in M_B (membership defect {defect:.3e})"
                return Witness(psi, phi, ov.value, w, loc)
    return None


def verify_theorem_equivalence(m_a, m_b, seed: int = 0, samples: int = 20,
                               tol: Tolerances = DEFAULT_TOL) -> TheoremReport:
    """Cross-check Haag duality against sampled Uhlmann behaviour.

    Equal-marginal pairs are produced as ``phi = u psi`` with ``u`` a random
    unitary of ``M_A'``; under duality every pair must reach overlap 1 and
    its intertwiner must lie in ``M_B``. Otherwise a witness must exist.
    """
    haag = check_haag_duality(m_a, m_b, tol)
    report = TheoremReport(haag, consistent=True)
    comm = m_a.commutant()
    n = m_a.hilbert_dim
    for i in range(samples):
        rng = np.random.default_rng([seed, i])
        psi = random_state(n, rng)
        phi = comm.random_unitary(rng) @ psi
        ov = max_overlap(m_b, psi, phi, tol)
        report.overlaps.append(ov.value)
        if haag.passed:
            iso = build_intertwiner(m_a, psi, phi, m_b, tol)
            report.samples.append({
                "max_overlap": ov.value,
                "in_MB_residual": iso.in_mb_residual,
                "map_residual": iso.map_residual,
            })
            if ov.value < 1.0 - tol.eq_tol or iso.in_mb_residual > 10 * tol.eq_tol:
                raise TheoremViolationError(
                    f"Haag duality holds but sample {i} has overlap {ov.value!r}, "
                    f"intertwiner defect {iso.in_mb_residual:.3e}"
                )
    if not haag.passed:
        report.witness = find_counterexample(m_a, m_b, seed, samples, tol)
        if report.witness is None:
            raise TheoremViolationError("Haag duality fails but no counterexample to the Uhlmann property was found")
    return report


def check_bipartition(m_a, m_b, seed: int = 0, samples: int = 20,
                      tol: Tolerances = DEFAULT_TOL) -> CheckReport:
    lt = check_local_tomography(m_a, m_b, tol)
    hd = check_haag_duality(m_a, m_b, tol)
    witnesses = []
    if not hd.passed:
        w = find_counterexample(m_a, m_b, seed, samples, tol)
        if w is not None:
            witnesses.append(w)
    factors = {"A": lt.details["factor_A"], "B": lt.details["factor_B"]}
    return CheckReport(lt, hd, factors, witnesses, tol)
