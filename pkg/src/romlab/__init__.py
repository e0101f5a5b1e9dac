"""Slab-geometry radiative transfer solver laboratory.

Deterministic and random ordinate discretizations of the isotropic-
scattering transport equation on a slab, with exact per-cell sweeps,
source iteration, a dense operator laboratory, and convergence studies.
"""

from .angular import (
    QuadratureSet,
    VelocityPartition,
    build_partition,
    composite_gauss,
    dom_quadrature,
    reference_quadrature,
    rom_sample,
    uniform_stream,
)
from .errors import (
    AlphaUnbounded,
    ConfigError,
    DeltaOutOfRange,
    GridMismatch,
    LambdaAtLeastOne,
    LengthMismatch,
    NoConvergence,
    NonPositiveSigmaT,
    OddN,
    PureAbsorber,
    ReferenceNotConverged,
    RomlabError,
    TooFewPoints,
    WrongHalf,
    ZeroMu,
)
from .medium import (
    BoundarySpec,
    ConstantBoundary,
    LinearBoundary,
    MediumProfile,
    ScalarFlux,
    SpatialGrid,
    TabulatedBoundary,
    eval_boundary,
    inflow_values,
    make_medium,
    weighted_l2_norm,
)
from .operators import (
    DeltaStats,
    DenseOperator,
    boundary_deviation_stats,
    gram_trace,
    iteration_deviation_stats,
    iteration_matrix,
    reference_iteration_matrix,
    transport_matrix,
    weighted_operator_norm,
)
from .solver import SolveReport, angular_fluxes, solve
from .sweep import AngularFlux, apply_transport, boundary_term, sweep_direction
from .experiments import (
    ErrorRow,
    ErrorTable,
    RegularizationRow,
    RegularizationTable,
    SlopeFit,
    StudyConfig,
    benchmark_config,
    bias_benchmark_config,
    bias_study,
    dom_error_study,
    fit_slope,
    reference_solution,
    regularization_study,
    single_run_error_study,
)

__version__ = "0.1.0"
