"""Exact differential elimination for polynomial dynamical systems.

Given x' = g(mu, x) and an observation y = f(mu, x), compute the minimal
differential equation satisfied by y: bound its support by a weighted
Newton polytope, interpolate the coefficients from evaluations of the Lie
tower at random prime-field points, and lift them to Q.
"""

from .exactfield import (
    BadPrimeError,
    PrimeField,
    crt_combine,
    derived_rng,
    is_prime,
    random_prime,
    rational_reconstruct,
)
from .lie import LieTower, estimate_order, lie_derivative, lie_tower
from .multipoly import Polynomial, VarSet
from .solver import (
    BoundExceededError,
    EliminationResult,
    LiftFailedError,
    SolveOptions,
    SolveStats,
    SupportTooLargeError,
    VerificationFailedError,
    eliminate,
    evaluation_row,
    kernel_prefix,
    term_count_stats,
)
from .support import (
    BoundSpec,
    OutMonomial,
    UnsupportedDimensionError,
    ansatz_key,
    bound_spec,
    enumerate_support,
    hull_lattice_count,
    leading_key,
    support_count,
)
from .system import (
    DegreeProfile,
    OdeSystem,
    SystemValidationError,
    dalg_combine,
    degree_profile,
    random_dense_system,
)
from .verify import (
    SeriesVector,
    series_solution,
    substitute_tower,
    verify_probabilistic,
    verify_series,
    verify_symbolic,
)

__version__ = "0.1.0"
