"""Toric-code lattice on an L x L torus.

Qubits sit on edges. Horizontal edge ``h(x, y)`` joins vertex ``(x, y)`` to
``(x+1, y)`` and has index ``y*L + x``; vertical edge ``v(x, y)`` joins
``(x, y)`` to ``(x, y+1)`` and has index ``L*L + y*L + x``. Face ``(x, y)``
has lower-left corner ``(x, y)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .stabilizer import Pauli, StabilizerState


class GeometryError(ValueError):
    """Invalid lattice, path or region geometry."""


@dataclass(frozen=True)
class Lattice:
    L: int

    def __post_init__(self):
        if self.L < 2:
            raise GeometryError(f"torus size must be at least 2, got {self.L}")

    @property
    def n_qubits(self) -> int:
        return 2 * self.L * self.L

    def vertices(self):
        return [(x, y) for y in range(self.L) for x in range(self.L)]

    faces = vertices

    def h(self, x: int, y: int) -> int:
        return (y % self.L) * self.L + (x % self.L)

    def v(self, x: int, y: int) -> int:
        return self.L * self.L + (y % self.L) * self.L + (x % self.L)

    def endpoints(self, e: int) -> tuple[tuple[int, int], tuple[int, int]]:
        L = self.L
        if e < L * L:
            x, y = e % L, e // L
            return (x, y), ((x + 1) % L, y)
        x, y = (e - L * L) % L, (e - L * L) // L
        return (x, y), (x, (y + 1) % L)

    def star_edges(self, vertex) -> list[int]:
        x, y = vertex
        return [self.h(x, y), self.h(x - 1, y), self.v(x, y), self.v(x, y - 1)]

    def plaquette_edges(self, face) -> list[int]:
        x, y = face
        return [self.h(x, y), self.h(x, y + 1), self.v(x, y), self.v(x + 1, y)]

    def _mask(self, edges) -> np.ndarray:
        m = np.zeros(self.n_qubits, np.uint8)
        for e in edges:
            m[e] ^= 1
        return m

    def star(self, vertex) -> Pauli:
        return Pauli(self._mask(self.star_edges(vertex)), np.zeros(self.n_qubits, np.uint8))

    def plaquette(self, face) -> Pauli:
        return Pauli(np.zeros(self.n_qubits, np.uint8), self._mask(self.plaquette_edges(face)))

    def logical_z(self) -> tuple[Pauli, Pauli]:
        """Z loops around the two torus cycles (row of horizontal edges, column of vertical edges)."""
        zero = np.zeros(self.n_qubits, np.uint8)
        z1 = Pauli(zero, self._mask([self.h(x, 0) for x in range(self.L)]))
        z2 = Pauli(zero, self._mask([self.v(0, y) for y in range(self.L)]))
        return z1, z2

    def logical_x(self) -> tuple[Pauli, Pauli]:
        """Dual X loops; the first anticommutes with the first logical Z."""
        zero = np.zeros(self.n_qubits, np.uint8)
        x1 = Pauli(self._mask([self.h(0, y) for y in range(self.L)]), zero)
        x2 = Pauli(self._mask([self.v(x, 0) for x in range(self.L)]), zero)
        return x1, x2

    def edge_between(self, a, b) -> int:
        """Edge joining neighbouring vertices; at L=2 the +x / +y edge is preferred."""
        L = self.L
        (ax, ay), (bx, by) = a, b
        if ay == by and (ax + 1) % L == bx:
            return self.h(ax, ay)
        if ay == by and (ax - 1) % L == bx:
            return self.h(bx, by)
        if ax == bx and (ay + 1) % L == by:
            return self.v(ax, ay)
        if ax == bx and (ay - 1) % L == by:
            return self.v(bx, by)
        raise GeometryError(f"vertices {a} and {b} are not adjacent")

    def dual_edge_between(self, f, g) -> int:
        """Edge shared by neighbouring faces."""
        L = self.L
        (fx, fy), (gx, gy) = f, g
        if fy == gy and (fx + 1) % L == gx:
            return self.v(gx, gy)
        if fy == gy and (fx - 1) % L == gx:
            return self.v(fx, fy)
        if fx == gx and (fy + 1) % L == gy:
            return self.h(gx, gy)
        if fx == gx and (fy - 1) % L == gy:
            return self.h(fx, fy)
        raise GeometryError(f"faces {f} and {g} are not adjacent")

    def edge_graph_connected(self, mask) -> bool:
        """Whether the edges in ``mask`` form one connected set (edges adjacent when sharing a vertex)."""
        edges = np.flatnonzero(np.asarray(mask, bool))
        if edges.size <= 1:
            return True
        L2 = self.L * self.L
        rows, cols = [], []
        for k, e in enumerate(edges):
            for (x, y) in self.endpoints(int(e)):
                rows.append(k)
                cols.append(y * self.L + x)
        inc = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(edges.size, L2)).tocsr()
        adj = inc @ inc.T
        count, _ = connected_components(adj, directed=False)
        return count == 1


def star_generators(lat: Lattice) -> list[Pauli]:
    return [lat.star(v) for v in lat.vertices()]


def plaquette_generators(lat: Lattice) -> list[Pauli]:
    return [lat.plaquette(f) for f in lat.faces()]


def ground_state(lat: Lattice, logical_sector: tuple[int, int] = (1, 1)) -> StabilizerState:
    """Code state fixed by all stars, all plaquettes and the two logical Z loops with the given signs."""
    stars = star_generators(lat)[:-1]
    plaqs = plaquette_generators(lat)[:-1]
    z1, z2 = lat.logical_z()
    logicals = [z if s == 1 else -z for z, s in zip((z1, z2), logical_sector)]
    return StabilizerState(stars + plaqs + logicals)


def string_operator(lat: Lattice, path: Sequence, kind: str) -> Pauli:
    """``e``: Z on the edges of a vertex path. ``m``: X on the edges crossed by a face path."""
    if kind not in ("e", "m"):
        raise ValueError(f"string kind must be 'e' or 'm', got {kind!r}")
    step = lat.edge_between if kind == "e" else lat.dual_edge_between
    bits = np.zeros(lat.n_qubits, np.uint8)
    for a, b in zip(path[:-1], path[1:]):
        try:
            bits[step(tuple(a), tuple(b))] ^= 1
        except GeometryError as exc:
            raise GeometryError(f"disconnected path: {exc}") from None
    zero = np.zeros(lat.n_qubits, np.uint8)
    return Pauli(zero, bits) if kind == "e" else Pauli(bits, zero)


def straight_path(lat: Lattice, start, dx: int, dy: int) -> list[tuple[int, int]]:
    """Vertex (or face) path stepping +x ``dx`` times then +y ``dy`` times."""
    x, y = start
    out = [(x % lat.L, y % lat.L)]
    for _ in range(dx):
        x += 1
        out.append((x % lat.L, y % lat.L))
    for _ in range(dy):
        y += 1
        out.append((x % lat.L, y % lat.L))
    return out


@dataclass(frozen=True)
class Region:
    name: str
    mask: np.ndarray = field(compare=False)

    def edges(self) -> list[int]:
        return np.flatnonzero(self.mask).tolist()

    def __len__(self):
        return int(np.count_nonzero(self.mask))

    def __or__(self, other: "Region") -> "Region":
        return Region(f"{self.name}+{other.name}", self.mask | other.mask)


@dataclass(frozen=True)
class TwoPatchScene:
    """Two separated patches A1, A2 with complement B, plus anyon sites and witness paths."""

    lattice: Lattice
    A1: Region
    A2: Region
    B: Region
    centers: tuple
    e_path: tuple
    m_path: tuple


def _torus_manhattan(lat: Lattice, a, b) -> int:
    dx = abs(a[0] - b[0]) % lat.L
    dy = abs(a[1] - b[1]) % lat.L
    return min(dx, lat.L - dx) + min(dy, lat.L - dy)


def patch(lat: Lattice, center, radius: int) -> np.ndarray:
    """Edges with an endpoint at torus Manhattan distance ``< radius`` from ``center``."""
    mask = np.zeros(lat.n_qubits, bool)
    for e in range(lat.n_qubits):
        if any(_torus_manhattan(lat, p, center) < radius for p in lat.endpoints(e)):
            mask[e] = True
    return mask


def _touched_vertices(lat: Lattice, mask) -> set:
    return {p for e in np.flatnonzero(mask) for p in lat.endpoints(int(e))}


def two_patch_regions(lat: Lattice, radius: int = 1, separation: int = 2) -> TwoPatchScene:
    """Place two patches whose closest vertices are ``separation`` edges apart.

    The anyons sit at the patch centres (e) and at the faces whose lower-left
    corner is a centre (m). Those faces straddle the patch boundary.
    """
    if radius < 1:
        raise GeometryError("patch radius must be at least 1")
    if separation < 1:
        raise GeometryError(f"separation {separation}: patches would touch")
    dist = 2 * radius + separation
    dx = (dist + 1) // 2
    dy = dist - dx
    c1, c2 = (0, 0), (dx % lat.L, dy % lat.L)
    if _torus_manhattan(lat, c1, c2) != dist:
        raise GeometryError(
            f"patches of radius {radius} at separation {separation} do not fit on an {lat.L}x{lat.L} torus"
        )
    a1, a2 = patch(lat, c1, radius), patch(lat, c2, radius)
    if np.any(a1 & a2) or _touched_vertices(lat, a1) & _touched_vertices(lat, a2):
        raise GeometryError("patches overlap or touch")
    b = ~(a1 | a2)
    if not lat.edge_graph_connected(b):
        raise GeometryError("complement region B is not connected")
    e_path = tuple(straight_path(lat, c1, dx, dy))
    m_path = tuple(straight_path(lat, c1, dx, dy))
    scene = TwoPatchScene(lat, Region("A1", a1), Region("A2", a2), Region("B", b), (c1, c2), e_path, m_path)
    for stab in (lat.star(c1), lat.star(c2), lat.plaquette(c1), lat.plaquette(c2)):
        if stab.supported_in(b):
            raise GeometryError("an anyon's stabilizer lies entirely inside B")
    return scene


SECTOR_LABELS = ("1", "e", "m", "em")


def anyon_pair_state(scene: TwoPatchScene, ground: StabilizerState, label: str,
                     e_path: Sequence | None = None, m_path: Sequence | None = None) -> StabilizerState:
    """Ground state with an anyon pair of type ``label`` created along the witness paths."""
    if label not in SECTOR_LABELS:
        raise ValueError(f"sector label must be one of {SECTOR_LABELS}, got {label!r}")
    lat = scene.lattice
    e_path = tuple(scene.e_path if e_path is None else e_path)
    m_path = tuple(scene.m_path if m_path is None else m_path)
    state = ground
    if "e" in label:
        _check_ends(lat, e_path, scene, lat.star)
        state = state.apply(string_operator(lat, e_path, "e"))
    if "m" in label:
        _check_ends(lat, m_path, scene, lat.plaquette)
        state = state.apply(string_operator(lat, m_path, "m"))
    return state


def _check_ends(lat: Lattice, path, scene: TwoPatchScene, stabilizer):
    for site, region in ((path[0], scene.A1), (path[-1], scene.A2)):
        if not region.mask[stabilizer(tuple(site)).support()].any():
            raise GeometryError(f"path endpoint {tuple(site)} is not located in {region.name}")


@dataclass(frozen=True)
class PurificationClasses:
    """The four sector states on a two-patch geometry and their comparison data."""

    scene: TwoPatchScene
    states: dict
    gram: np.ndarray
    signatures: dict
    signatures_equal: bool
    connectivity: dict
    detectors: dict

    def to_dict(self) -> dict:
        return {
            "L": self.scene.lattice.L,
            "sizes": {r.name: len(r) for r in (self.scene.A1, self.scene.A2, self.scene.B)},
            "gram": self.gram.tolist(),
            "signature_sizes": {k: len(v) for k, v in self.signatures.items()},
            "signatures_equal": self.signatures_equal,
            "signature_matches_vacuum": {k: v == self.signatures["1"] for k, v in self.signatures.items()},
            "connectivity_A": {f"{a}-{b}": ok for (a, b), ok in self.connectivity.items()},
            "detectors": {k: (p.label() if p is not None else None) for k, p in self.detectors.items()},
        }


def purification_classes(lat: Lattice, scene: TwoPatchScene | None = None, strict: bool = False,
                         radius: int = 1, separation: int = 2) -> PurificationClasses:
    """Build the 1, e, m, em states and compare them on B and across A1 + A2.

    With ``strict=True`` unequal B-signatures raise :class:`GeometryError`;
    otherwise they are reported along with a B-supported detecting stabilizer.
    """
    from .stabilizer import marginal_signature, overlap_magnitude, pauli_connectivity, signature_detector

    scene = two_patch_regions(lat, radius, separation) if scene is None else scene
    ground = ground_state(lat)
    states = {lab: anyon_pair_state(scene, ground, lab) for lab in SECTOR_LABELS}
    gram = np.array([[overlap_magnitude(states[a], states[b]) for b in SECTOR_LABELS] for a in SECTOR_LABELS])
    b_mask = scene.B.mask
    sigs = {lab: marginal_signature(states[lab], b_mask) for lab in SECTOR_LABELS}
    equal = all(sigs[lab] == sigs["1"] for lab in SECTOR_LABELS)
    detectors = {lab: signature_detector(states["1"], states[lab], b_mask) for lab in SECTOR_LABELS[1:]}
    if strict and not equal:
        bad = [lab for lab in SECTOR_LABELS if sigs[lab] != sigs["1"]]
        raise GeometryError(f"B-marginal signatures differ for sectors {bad}")
    a_mask = (scene.A1 | scene.A2).mask
    conn = {}
    for i, a in enumerate(SECTOR_LABELS):
        for b in SECTOR_LABELS[i + 1:]:
            conn[(a, b)] = pauli_connectivity(states[a], states[b], a_mask)[0]
    return PurificationClasses(scene, states, gram, sigs, equal, conn, detectors)
