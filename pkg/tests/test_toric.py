import itertools

import numpy as np
import pytest

from oracles import bruteforce_stabilizer_vector
from uhlmannlab.toric import gf2
from uhlmannlab.toric.dense import (
    QubitCapError,
    dense_cross_check,
    dense_ground_state,
    dense_reduced_density,
    dense_state,
    operator_schmidt_rank,
)
from uhlmannlab.toric.lattice import (
    SECTOR_LABELS,
    GeometryError,
    Lattice,
    anyon_pair_state,
    ground_state,
    plaquette_generators,
    purification_classes,
    star_generators,
    straight_path,
    string_operator,
    two_patch_regions,
)
from uhlmannlab.toric.stabilizer import (
    Pauli,
    StabilizerState,
    marginal_signature,
    overlap_magnitude,
    pauli_connectivity,
    signature_detector,
    stabilizer_reduced_density,
)


# -- GF(2) -------------------------------------------------------------------

def test_gf2_rank_and_nullspace_bruteforce(rng):
    for _ in range(20):
        m = rng.integers(0, 2, size=(4, 6))
        null = gf2.nullspace(m)
        brute = [v for v in itertools.product([0, 1], repeat=6) if not np.any(m @ np.array(v) % 2)]
        assert 2 ** len(null) == len(brute)
        assert gf2.rank(m) == 6 - len(null)
        for v in null:
            assert not np.any(m @ v % 2)


def test_gf2_solve(rng):
    for _ in range(20):
        m = rng.integers(0, 2, size=(5, 4))
        x = rng.integers(0, 2, size=4)
        sol = gf2.solve(m, m @ x % 2)
        assert sol is not None and np.array_equal(m @ sol % 2, m @ x % 2)
    assert gf2.solve(np.array([[1, 1], [1, 1]]), np.array([0, 1])) is None


# -- Pauli algebra -------------------------------------------------------------

def _random_pauli(n, rng):
    return Pauli(rng.integers(0, 2, n), rng.integers(0, 2, n), int(rng.integers(0, 4)))


def test_pauli_product_matches_dense(rng):
    for _ in range(20):
        p, q = _random_pauli(3, rng), _random_pauli(3, rng)
        assert np.allclose((p * q).to_dense(), p.to_dense() @ q.to_dense())
        d = p.to_dense() @ q.to_dense() - q.to_dense() @ p.to_dense()
        assert p.commutes(q) == np.allclose(d, 0)


def test_pauli_hermiticity_and_labels():
    y = Pauli.from_label("Y")
    assert np.allclose(y.to_dense(), [[0, -1j], [1j, 0]])
    assert y.is_hermitian() and y.sign() == 1 and y.label() == "+Y"
    assert (-Pauli.from_label("XZ")).label() == "-XZ"
    assert not Pauli(np.array([1]), np.array([0]), 1).is_hermitian()
    h = Pauli.hermitian([1, 1], [1, 0], sign=-1)
    assert np.allclose(h.to_dense(), h.to_dense().conj().T)


# -- stabilizer states ------------------------------------------------------------

def _dense_check_state(state):
    vec = dense_state(state)
    for g in state.generators:
        assert np.allclose(g.apply_dense(vec), vec, atol=1e-12)
    return vec


def test_stabilizer_validation():
    with pytest.raises(ValueError):
        StabilizerState([Pauli.from_label("XI"), Pauli.from_label("ZI")])
    with pytest.raises(ValueError):
        StabilizerState([Pauli.from_label("ZI"), Pauli.from_label("ZI")])


def test_expectation_and_overlap_match_dense(rng):
    lat = Lattice(2)
    g = ground_state(lat)
    states = [g]
    for _ in range(4):
        states.append(g.apply(_random_pauli(lat.n_qubits, rng)))
    product = StabilizerState([Pauli(np.zeros(8), np.eye(8, dtype=int)[i]) for i in range(8)])
    states.append(product)
    vecs = [_dense_check_state(s) for s in states]
    for s, v in zip(states, vecs):
        for _ in range(20):
            p = Pauli.hermitian(rng.integers(0, 2, 8), rng.integers(0, 2, 8))
            assert abs(s.expectation(p) - np.vdot(v, p.apply_dense(v))) <= 1e-12
    for (s1, v1), (s2, v2) in itertools.product(zip(states, vecs), repeat=2):
        assert abs(overlap_magnitude(s1, s2) - abs(np.vdot(v1, v2))) <= 1e-12


def test_dense_state_matches_bruteforce_oracle():
    g = ground_state(Lattice(2))
    v = dense_state(g)
    w = bruteforce_stabilizer_vector([p.to_dense() for p in g.generators], 8)
    assert abs(abs(np.vdot(v, w)) - 1) <= 1e-10


def test_reduced_density_matches_dense(rng):
    g = ground_state(Lattice(2)).apply(_random_pauli(8, rng))
    v = dense_state(g)
    for _ in range(4):
        mask = rng.integers(0, 2, 8).astype(bool)
        if not mask.any():
            continue
        assert np.abs(stabilizer_reduced_density(g, mask) - dense_reduced_density(v, mask, 8)).max() <= 1e-12


def test_qubit_cap():
    with pytest.raises(QubitCapError):
        dense_ground_state(Lattice(3))


# -- lattice -------------------------------------------------------------------

def test_lattice_counts():
    lat = Lattice(2)
    assert lat.n_qubits == 8 and Lattice(3).n_qubits == 18
    stars, plaqs = star_generators(lat), plaquette_generators(lat)
    assert len(stars) == 4 and gf2.rank([s.bits for s in stars]) == 3
    assert len(plaqs) == 4 and gf2.rank([p.bits for p in plaqs]) == 3
    # ground space dimension before fixing the logical sector
    assert 2 ** (lat.n_qubits - gf2.rank([p.bits for p in stars + plaqs])) == 4
    with pytest.raises(GeometryError):
        Lattice(1)


@pytest.mark.parametrize("L", [2, 3, 4])
def test_lattice_incidence(L):
    lat = Lattice(L)
    vcount = np.zeros(lat.n_qubits, int)
    fcount = np.zeros(lat.n_qubits, int)
    for v in lat.vertices():
        vcount[lat.star_edges(v)] += 1
    for f in lat.faces():
        fcount[lat.plaquette_edges(f)] += 1
    assert np.all(vcount == 2) and np.all(fcount == 2)
    total_x = np.bitwise_xor.reduce([s.x for s in star_generators(lat)])
    total_z = np.bitwise_xor.reduce([p.z for p in plaquette_generators(lat)])
    assert not total_x.any() and not total_z.any()
    for s in star_generators(lat):
        for p in plaquette_generators(lat):
            assert s.commutes(p)


def _anticommuting(lat, op, kind):
    gens = star_generators(lat) if kind == "star" else plaquette_generators(lat)
    sites = lat.vertices()
    return [site for site, g in zip(sites, gens) if not g.commutes(op)]


def test_string_operator_endpoints():
    lat = Lattice(4)
    op = string_operator(lat, [(0, 0), (1, 0)], "e")
    assert sorted(_anticommuting(lat, op, "star")) == [(0, 0), (1, 0)]
    op = string_operator(lat, [(0, 0), (1, 0), (1, 1), (1, 2)], "e")
    assert sorted(_anticommuting(lat, op, "star")) == [(0, 0), (1, 2)]
    assert not _anticommuting(lat, op, "plaquette")
    op = string_operator(lat, [(0, 0), (1, 0), (2, 0)], "m")
    assert sorted(_anticommuting(lat, op, "plaquette")) == [(0, 0), (2, 0)]
    assert not _anticommuting(lat, op, "star")


def test_contractible_loop_is_plaquette_product():
    lat = Lattice(4)
    loop = string_operator(lat, [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)], "e")
    assert not _anticommuting(lat, loop, "star") and not _anticommuting(lat, loop, "plaquette")
    assert gf2.in_rowspace(np.array([p.bits for p in plaquette_generators(lat)]), loop.bits)


def test_disconnected_path_errors():
    with pytest.raises(GeometryError):
        string_operator(Lattice(4), [(0, 0), (2, 0)], "e")
    with pytest.raises(ValueError):
        string_operator(Lattice(4), [(0, 0), (1, 0)], "q")


def test_ground_state_stabilized():
    for L in (2, 3, 4):
        lat = Lattice(L)
        g = ground_state(lat)
        for s in star_generators(lat) + plaquette_generators(lat):
            assert g.expectation(s) == 1


def test_homologous_strings_give_same_state():
    lat = Lattice(4)
    g = ground_state(lat)
    a = g.apply(string_operator(lat, [(0, 0), (1, 0), (1, 1)], "e"))
    b = g.apply(string_operator(lat, [(0, 0), (0, 1), (1, 1)], "e"))
    assert a.same_state(b)
    # an m-string winding around the torus flips a logical Z, so the state changes
    short = g.apply(string_operator(lat, [(0, 0), (1, 0)], "m"))
    long = g.apply(string_operator(lat, [(0, 0), (3, 0), (2, 0), (1, 0)], "m"))
    assert not short.same_state(long)
    assert overlap_magnitude(short, long) == 0.0


# -- two-patch geometry and sectors ---------------------------------------------------------

@pytest.fixture(scope="module")
def scene4():
    lat = Lattice(4)
    return lat, two_patch_regions(lat, 1, 2)


def test_regions_L6():
    for sep in (2, 3):
        sc = two_patch_regions(Lattice(6), 1, sep)
        assert len(sc.A1) == len(sc.A2)
        assert not np.any(sc.A1.mask & sc.A2.mask)
        assert np.all(sc.A1.mask | sc.A2.mask | sc.B.mask)
        assert sc.lattice.edge_graph_connected(sc.B.mask)
    with pytest.raises(GeometryError):
        two_patch_regions(Lattice(6), 1, 0)
    with pytest.raises(GeometryError):
        two_patch_regions(Lattice(3), 1, 2)


def test_anyon_states(scene4):
    lat, sc = scene4
    g = ground_state(lat)
    assert anyon_pair_state(sc, g, "1").same_state(g)
    e = anyon_pair_state(sc, g, "e")
    flipped = [v for v in lat.vertices() if e.expectation(lat.star(v)) == -1]
    assert sorted(flipped) == sorted(sc.centers)
    em = anyon_pair_state(sc, g, "em")
    assert sum(em.expectation(lat.star(v)) == -1 for v in lat.vertices()) == 2
    assert sum(em.expectation(lat.plaquette(f)) == -1 for f in lat.faces()) == 2
    with pytest.raises(GeometryError):
        anyon_pair_state(sc, g, "e", e_path=[(1, 1), (2, 1)])


def test_signature_full_region_and_A1(scene4):
    lat, sc = scene4
    g = ground_state(lat)
    e = anyon_pair_state(sc, g, "e")
    everything = np.ones(lat.n_qubits, bool)
    assert marginal_signature(g, everything) != marginal_signature(e, everything)
    assert marginal_signature(g, sc.A1.mask) != marginal_signature(e, sc.A1.mask)


def test_signature_on_B_detects_the_pair(scene4):
    """Ground and e-pair states differ on B: the product of the stars around
    A1 is a B-supported stabilizer that anticommutes with every string
    leaving A1."""
    lat, sc = scene4
    g = ground_state(lat)
    e = anyon_pair_state(sc, g, "e")
    assert marginal_signature(g, sc.B.mask) != marginal_signature(e, sc.B.mask)
    det = signature_detector(g, e, sc.B.mask)
    assert det is not None and det.supported_in(sc.B.mask)
    assert g.expectation(det) == 1 and e.expectation(det) == -1


def test_signature_invariant_under_outside_paulis(scene4, rng):
    lat, sc = scene4
    g = ground_state(lat)
    for _ in range(5):
        p = _random_pauli(lat.n_qubits, rng)
        p = Pauli(p.x & ~sc.B.mask, p.z & ~sc.B.mask)
        assert marginal_signature(g.apply(p), sc.B.mask) == marginal_signature(g, sc.B.mask)


def test_connectivity_examples(scene4):
    lat, sc = scene4
    g = ground_state(lat)
    e = anyon_pair_state(sc, g, "e")
    ok, op = pauli_connectivity(g, e, np.ones(lat.n_qubits, bool))
    assert ok and g.apply(op).same_state(e)
    assert not pauli_connectivity(g, e, (sc.A1 | sc.A2).mask)[0]
    # a pair created by a string running entirely inside B
    path = [(1, 2), (1, 3), (2, 3), (3, 3)]
    s = string_operator(lat, path, "e")
    assert s.supported_in(sc.B.mask)
    ok, op = pauli_connectivity(g, g.apply(s), sc.B.mask)
    assert ok and op.supported_in(sc.B.mask)


def test_purification_classes_gram_and_connectivity(scene4):
    lat, sc = scene4
    pc = purification_classes(lat, sc)
    assert np.array_equal(pc.gram, np.eye(4))
    assert set(pc.connectivity) == {(a, b) for i, a in enumerate(SECTOR_LABELS) for b in SECTOR_LABELS[i + 1:]}
    assert not any(pc.connectivity.values())
    # every nontrivial sector is exposed on B by a detecting stabilizer
    assert not pc.signatures_equal
    assert all(pc.detectors[k] is not None for k in ("e", "m", "em"))
    with pytest.raises(GeometryError):
        purification_classes(lat, sc, strict=True)


# -- dense cross-check ----------------------------------------------------------------

def test_dense_cross_check():
    r = dense_cross_check(2)
    assert max(r["engine_agreement"].values()) <= 1e-12
    assert np.allclose(r["logical_sector_gram"], np.eye(4), atol=1e-12)
    assert r["haag_duality"]["passed"]
    assert r["B_marginal_dev"] <= 1e-12
    assert r["intertwiner"]["map_residual"] <= 1e-8
    assert r["intertwiner"]["in_MA"]
    # equal B-marginals of stabilizer states force an A-supported connecting Pauli
    assert r["pauli_connectivity_A"]["feasible"]
    assert r["operator_schmidt_rank_A1_A2"] >= 1


def test_operator_schmidt_rank():
    x = np.array([[0, 1], [1, 0]])
    z = np.diag([1, -1])
    assert operator_schmidt_rank(np.kron(x, z), (2, 2))[0] == 1
    cnot = np.eye(4)[[0, 1, 3, 2]]
    assert operator_schmidt_rank(cnot, (2, 2))[0] == 2
