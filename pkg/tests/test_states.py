import numpy as np
import pytest

from conftest import BELL, I2, KET0, KET1, MINUS, PLUS, X, Z
from oracles import fidelity_oracle
from uhlmannlab import algebra as alg
from uhlmannlab.numerics import DimensionError, ValidationError, random_density, random_state
from uhlmannlab.states import (
    AlgebraFunctional,
    cyclic_projection,
    fidelity,
    gns_construct,
    marginal,
    marginals_equal,
    partial_trace_second,
    purify,
)

M2_1 = alg.generate_algebra([np.kron(X, I2), np.kron(Z, I2)], 4)
DIAG_1 = alg.generate_algebra([np.kron(Z, I2)], 4)


def test_marginal_of_scalars():
    m = alg.scalar_algebra(3)
    f = marginal(random_state(3, np.random.default_rng(0)), m)
    assert f.values.shape == (1,)
    assert f(np.eye(3)) == pytest.approx(1.0)


def test_bell_marginal_is_normalized_trace(rng):
    f = marginal(BELL, M2_1)
    for _ in range(5):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert abs(f(np.kron(a, I2)) - np.trace(a) / 2) <= 1e-12


def test_product_marginal(rng):
    f = marginal(np.kron(KET0, KET0), M2_1)
    a = rng.normal(size=(2, 2))
    assert abs(f(np.kron(a, I2)) - a[0, 0]) <= 1e-12


def test_marginal_dimension_mismatch():
    with pytest.raises(DimensionError):
        marginal(np.ones(3) / np.sqrt(3), M2_1)


def test_marginals_equal_examples(rng):
    m = alg.random_algebra(4, rng)
    psi = random_state(4, rng)
    u = m.commutant().random_unitary(rng)
    assert marginals_equal(psi, u @ psi, m)[0]
    ok, dev = marginals_equal(np.kron(PLUS, KET0), np.kron(MINUS, KET0), DIAG_1)
    assert ok and dev <= 1e-12
    ok, dev = marginals_equal(np.kron(KET0, KET0), np.kron(KET1, KET0), M2_1)
    assert not ok and dev == pytest.approx(1.0)


def test_fidelity_examples(rng):
    rho = random_density(3, rng)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    assert fidelity(np.diag([1.0, 0]), np.diag([0, 1.0])) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(np.diag([1.0, 0]), np.diag([0.5, 0.5])) == pytest.approx(0.7071067812, abs=1e-10)


def test_fidelity_matches_scipy_oracle_and_is_symmetric(rng):
    for n in (2, 3, 4, 6):
        r, s = random_density(n, rng), random_density(n, rng, rank=max(1, n - 2))
        assert abs(fidelity(r, s) - fidelity_oracle(r, s)) <= 1e-8
        assert abs(fidelity(r, s) - fidelity(s, r)) <= 1e-9


def test_fidelity_rejects_non_psd():
    with pytest.raises(ValidationError):
        fidelity(np.diag([1.5, -0.5]), np.eye(2) / 2)


def test_purify_examples():
    v = np.array([0.6, 0.8j])
    p = purify(np.outer(v, v.conj()))
    assert abs(abs(np.vdot(np.kron(v, KET0), p)) - 1) <= 1e-12
    p = purify(np.eye(2) / 2)
    assert np.allclose(np.linalg.svd(p.reshape(2, 2), compute_uv=False), [1 / np.sqrt(2)] * 2)
    p = purify(np.diag([0.75, 0.25]))
    assert np.allclose(np.linalg.svd(p.reshape(2, 2), compute_uv=False), [np.sqrt(3) / 2, 0.5])


def test_purify_reduces_back(rng):
    for n in (2, 3, 5):
        rho = random_density(n, rng)
        p = purify(rho)
        assert np.linalg.norm(partial_trace_second(p, (n, n)) - rho) <= 1e-9


def test_purify_is_deterministic(rng):
    rho = random_density(3, rng)
    assert np.array_equal(purify(rho), purify(rho))


def test_cyclic_projection_examples(rng):
    psi = random_state(3, rng)
    assert np.allclose(cyclic_projection(alg.full_algebra(3), psi), np.eye(3), atol=1e-10)
    assert np.allclose(cyclic_projection(alg.scalar_algebra(3), psi), np.outer(psi, psi.conj()), atol=1e-10)
    p = cyclic_projection(M2_1, np.kron(KET0, KET0))
    assert np.allclose(p, np.kron(I2, np.diag([1, 0])), atol=1e-10)


def test_cyclic_projection_in_commutant(rng):
    for n in (3, 4, 6):
        m = alg.random_algebra(n, rng)
        p = cyclic_projection(m, random_state(n, rng))
        assert np.linalg.norm(p @ p - p) <= 1e-9
        assert m.commutant().residual(p) <= 1e-9


def test_gns_pure_state_on_full_algebra():
    m = alg.full_algebra(2)
    f = AlgebraFunctional.from_density(m, np.diag([1.0, 0.0]))
    g = gns_construct(m, f)
    assert g.gns_dim == 2
    for i, e in enumerate(m.basis):
        # the representation is the identity representation up to a unitary
        assert np.allclose(np.sort(np.linalg.svd(g.rep_matrices[i], compute_uv=False)),
                           np.sort(np.linalg.svd(e, compute_uv=False)), atol=1e-10)


def test_gns_diagonal_pure_functional():
    m = alg.generate_algebra([Z], 2)
    f = AlgebraFunctional.from_density(m, np.diag([1.0, 0.0]))
    assert gns_construct(m, f).gns_dim == 1


def test_gns_faithful_trace():
    m = alg.full_algebra(2)
    g = gns_construct(m, AlgebraFunctional.from_density(m, np.eye(2) / 2))
    assert g.gns_dim == 4


def test_gns_invariants(rng):
    m = alg.random_algebra(4, rng)
    psi = random_state(4, rng)
    f = marginal(psi, m)
    g = gns_construct(m, f)
    for i in range(m.dim):
        assert abs(g.expectation(i) - f.values[i]) <= 1e-9
    # representation property
    for i in range(m.dim):
        for j in range(m.dim):
            c = m.coefficients(m.basis[i] @ m.basis[j])
            rep = np.tensordot(c, g.rep_matrices, axes=1)
            assert np.linalg.norm(g.rep_matrices[i] @ g.rep_matrices[j] - rep) <= 1e-8


def test_gns_rejects_non_positive():
    m = alg.full_algebra(2)
    with pytest.raises(ValidationError):
        gns_construct(m, AlgebraFunctional.from_density(m, np.diag([1.5, -0.5])))
