import numpy as np
import pytest

from conftest import BELL, I2, KET0, MINUS, PLUS, X, Z
from oracles import unitary_ascent
from uhlmannlab import algebra as alg
from uhlmannlab import duality
from uhlmannlab.numerics import random_state
from uhlmannlab.states import cyclic_projection, marginals_equal

M2_1 = alg.generate_algebra([np.kron(X, I2), np.kron(Z, I2)], 4)
ONE_M2 = alg.generate_algebra([np.kron(I2, X), np.kron(I2, Z)], 4)
DIAG_1 = alg.generate_algebra([np.kron(Z, I2)], 4)
PSI_W = np.kron(PLUS, KET0)
PHI_W = np.kron(MINUS, KET0)


def test_local_tomography_examples():
    assert duality.check_local_tomography(M2_1, ONE_M2).passed
    v = duality.check_local_tomography(DIAG_1, ONE_M2)
    assert not v.passed and v.details["join_dim"] == 8 and not v.details["factor_A"]
    assert duality.check_local_tomography(alg.scalar_algebra(3), alg.full_algebra(3)).passed


def test_non_commuting_inputs_rejected():
    with pytest.raises(duality.NonCommutingError) as info:
        duality.check_haag_duality(M2_1, alg.full_algebra(4))
    assert info.value.pair is not None


def test_haag_examples(rng):
    assert duality.check_haag_duality(M2_1, ONE_M2).passed
    v = duality.check_haag_duality(DIAG_1, ONE_M2)
    assert not v.passed
    assert v.details["B_in_A_commutant_defect"] <= 1e-9
    assert v.details["A_commutant_in_B_defect"] > 0.1
    m_b = alg.random_algebra(5, rng)
    assert duality.check_haag_duality(m_b.commutant(), m_b).passed


def test_max_overlap_examples(rng):
    m = alg.random_algebra(4, rng)
    psi = random_state(4, rng)
    u = m.random_unitary(rng)
    assert duality.max_overlap(m, psi, u @ psi).value == pytest.approx(1.0, abs=1e-9)
    assert duality.max_overlap(ONE_M2, BELL, np.kron(KET0, KET0)).value == pytest.approx(1 / np.sqrt(2), abs=1e-12)
    assert duality.max_overlap(ONE_M2, PSI_W, PHI_W).value == pytest.approx(0.0, abs=1e-12)


def test_max_overlap_full_algebra_is_one(rng):
    for n in (2, 3, 5):
        r = duality.max_overlap(alg.full_algebra(n), random_state(n, rng), random_state(n, rng))
        assert r.value == pytest.approx(1.0, abs=1e-9)
        assert r.optimizer_residual <= 1e-9


def test_max_overlap_matches_ascent_oracle(rng):
    for n in (2, 3, 4):
        for blocks in alg.random_block_structure(n, rng), None:
            m = alg.random_algebra(n, rng, blocks)
            psi, phi = random_state(n, rng), random_state(n, rng)
            closed = duality.max_overlap(m, psi, phi).value
            assert abs(closed - unitary_ascent(m.project, psi, phi, rng)) <= 1e-6


def test_max_overlap_monotone(rng):
    for _ in range(5):
        big = alg.random_algebra(4, rng)
        small = alg.generate_algebra([big.random_hermitian(rng)], 4)
        psi, phi = random_state(4, rng), random_state(4, rng)
        assert duality.max_overlap(small, psi, phi).value <= duality.max_overlap(big, psi, phi).value + 1e-9


def test_intertwiner_examples(rng):
    m = alg.random_algebra(4, rng)
    psi = random_state(4, rng)
    r = duality.build_intertwiner(m, psi, psi)
    assert np.allclose(r.v, cyclic_projection(m, psi), atol=1e-9)

    phi = np.kron(I2, X) @ BELL
    r = duality.build_intertwiner(M2_1, BELL, phi, m_b=ONE_M2)
    assert np.allclose(r.v, np.kron(I2, X), atol=1e-9)
    assert r.in_mb

    r = duality.build_intertwiner(DIAG_1, PSI_W, PHI_W, m_b=ONE_M2)
    assert r.commutant_residual <= 1e-8 and r.map_residual <= 1e-8
    assert not r.in_mb and r.in_mb_residual > 0.1


def test_intertwiner_invariants(rng):
    for n in (3, 4, 6):
        m = alg.random_algebra(n, rng)
        psi = random_state(n, rng)
        phi = m.commutant().random_unitary(rng) @ psi
        r = duality.build_intertwiner(m, psi, phi)
        v = r.v
        for p in (v.conj().T @ v, v @ v.conj().T):
            assert np.linalg.norm(p @ p - p) <= 1e-8
        assert r.commutant_residual <= 1e-8
        assert r.map_residual <= 1e-8


def test_intertwiner_rejects_unequal_marginals():
    with pytest.raises(duality.PreconditionError):
        duality.build_intertwiner(M2_1, np.kron(KET0, KET0), np.kron(np.array([0, 1.0]), KET0))


def test_uhlmann_pair_examples(rng):
    psi = random_state(4, rng)
    phi = np.kron(I2, X) @ psi
    r = duality.check_uhlmann_pair(M2_1, ONE_M2, psi, phi)
    assert r.verdict == "pass" and r.max_overlap == pytest.approx(1.0, abs=1e-9)
    assert r.intertwiner.in_mb
    r = duality.check_uhlmann_pair(DIAG_1, ONE_M2, PSI_W, PHI_W)
    assert r.marginals_equal and r.verdict == "fail" and r.max_overlap <= 1e-12
    r = duality.check_uhlmann_pair(M2_1, ONE_M2, np.kron(KET0, KET0), np.kron(np.array([0, 1.0]), KET0))
    assert r.verdict == "vacuous"


def test_counterexample_examples():
    assert duality.find_counterexample(M2_1, ONE_M2) is None
    w = duality.find_counterexample(ONE_M2, DIAG_1)
    assert w is not None and w.max_overlap < 1 - 1e-9
    assert marginals_equal(w.psi, w.phi, ONE_M2)[0]
    s = alg.scalar_algebra(2)
    w = duality.find_counterexample(s, s)
    assert w is not None
    assert w.max_overlap == pytest.approx(abs(np.vdot(w.psi, w.phi)), abs=1e-12)
    assert w.max_overlap < 1 - 1e-9


def test_theorem_equivalence_examples(rng):
    rep = duality.verify_theorem_equivalence(M2_1, ONE_M2, seed=0, samples=50)
    assert rep.haag_duality.passed and min(rep.overlaps) >= 1 - 1e-9
    rep = duality.verify_theorem_equivalence(DIAG_1, ONE_M2, seed=0)
    assert not rep.haag_duality.passed and rep.witness is not None
    m_a = alg.random_algebra(5, rng)
    rep = duality.verify_theorem_equivalence(m_a, m_a.commutant(), seed=1)
    assert rep.haag_duality.passed and rep.consistent


def test_symmetry_for_dual_pairs(rng):
    for n in (3, 4, 6):
        m = alg.random_algebra(n, rng)
        c = m.commutant()
        assert duality.check_haag_duality(m, c).passed == duality.check_haag_duality(c, m).passed


def test_symmetry_of_sampled_verdicts(rng):
    pairs = [(DIAG_1, ONE_M2), (M2_1, ONE_M2)]
    m = alg.random_algebra(4, rng)
    pairs.append((m, alg.generate_algebra([m.commutant().random_hermitian(rng)], 4)))
    for a, b in pairs:
        fwd = duality.verify_theorem_equivalence(a, b, seed=2, samples=5)
        bwd = duality.verify_theorem_equivalence(b, a, seed=2, samples=5)
        assert fwd.haag_duality.passed == bwd.haag_duality.passed


def test_check_bipartition_report():
    rep = duality.check_bipartition(DIAG_1, ONE_M2)
    assert not rep.local_tomography.passed and not rep.haag_duality.passed
    assert rep.factors == {"A": False, "B": True}
    assert rep.witnesses and rep.witnesses[0].max_overlap < 1
