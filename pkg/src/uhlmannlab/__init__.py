"""Finite-dimensional checks of the Uhlmann property and Haag duality."""
from .numerics import DEFAULT_TOL, DimensionError, InternalConsistencyError, Tolerances, ValidationError
from .algebra import OperatorAlgebra, TensorFactorAlgebra, commutant, generate_algebra, join, intersection
from .states import fidelity, marginals_equal, purify, gns_construct, cyclic_projection
from .duality import (
    PreconditionError,
    TheoremViolationError,
    build_intertwiner,
    check_bipartition,
    check_haag_duality,
    check_local_tomography,
    check_uhlmann_pair,
    find_counterexample,
    max_overlap,
    verify_theorem_equivalence,
)

__version__ = "0.1.0"
