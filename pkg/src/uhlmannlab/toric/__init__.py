"""Toric-code anyon sectors: stabilizer engine, lattice geometry, dense cross-check."""
from .lattice import (
    TwoPatchScene,
    GeometryError,
    Lattice,
    PurificationClasses,
    Region,
    SECTOR_LABELS,
    anyon_pair_state,
    ground_state,
    purification_classes,
    two_patch_regions,
    string_operator,
)
from .stabilizer import (
    MarginalSignature,
    Pauli,
    StabilizerState,
    marginal_signature,
    overlap_magnitude,
    pauli_connectivity,
    signature_detector,
)
from .dense import QubitCapError, dense_cross_check, dense_ground_state, dense_state

__all__ = [
    "TwoPatchScene", "GeometryError", "Lattice", "PurificationClasses", "Region", "SECTOR_LABELS",
    "anyon_pair_state", "ground_state", "purification_classes", "two_patch_regions", "string_operator",
    "MarginalSignature", "Pauli", "StabilizerState", "marginal_signature", "overlap_magnitude",
    "pauli_connectivity", "signature_detector", "QubitCapError", "dense_cross_check",
    "dense_ground_state", "dense_state",
]
