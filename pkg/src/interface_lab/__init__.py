"""Numerical laboratory for mixed gradient/Laplacian Gaussian interfaces.

Lattice fields with precision J = sum_i kappa_i (-Delta)^i and zero
exterior: operators, Green's functions (finite volume and by Fourier
inversion), exact samplers, rescaled-field variance experiments against
their continuum limits, and finite-difference error/spectral-gap studies.
"""

from .domains import (
    DomainSpec,
    LatticeDomain,
    ThomeePartition,
    discretize,
    graph_distance,
    thomee_partition,
)
from .errors import (
    CoefficientSignError,
    ConfigError,
    DimensionMismatch,
    EmptyInterior,
    ExperimentError,
    InterfaceLabError,
    NoConvergence,
    QuadratureNotConverged,
    SolveFailure,
)
from .fdm import (
    ErrorTable,
    ManufacturedSolution,
    ball_solution,
    grid_norm,
    smallest_eigenvalue,
    spectral_gap_convergence,
    thomee_error,
    thomee_error_table,
    truncated_residual,
)
from .greens import (
    GreenColumn,
    LinearSolver,
    dirichlet_solve,
    green_column,
    green_infinite,
    mu_sandwich_check,
)
from .operators import (
    Coefficients,
    SparseSymOperator,
    apply,
    laplacian_normalized,
    precision,
    scaled_operator_Lh,
    symbol_mu,
)
from .quadrature import QuadratureSpec
from .report import ExperimentReport, Reference
from .sampling import (
    SampleBatch,
    empirical_covariance,
    pinned_walk_paths,
    sample,
    sample_bridge_dgff_1d,
)
from .scaling import (
    EigenData,
    PathFunction1d,
    TestFunction,
    besov_scaling_statistic,
    box_eigendata,
    bridge_covariance,
    discrete_variance_fourier,
    field_pairing,
    gff_series_sample,
    green_interp_sup_distance_1d,
    interpolate_path_1d,
    limit_variance_finite,
    limit_variance_infinite,
    path_max_1d,
    sobolev_norm_neg,
    variance_pairing_exact,
)

__version__ = "0.1.0"
