"""Rank-coupled mean-field planning: potential-formulation solver and certificates."""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateDensityError,
    DomainError,
    InvalidManufacturedSolutionError,
    InvalidTestFunctionError,
    RankMfpError,
    StagnationError,
)
from .grid import (
    BoundaryDensities,
    CellField,
    GridSpec,
    NodeField,
    ReferencePotential,
    build_reference_potential,
    cell_average,
    cell_gradient,
    cell_integral,
    node_resample,
)
from .hamiltonians import (
    HamiltonianModel,
    LagrangianEval,
    PerspectiveEval,
    check_subgradient,
    eval_hamiltonian,
    legendre_lagrangian,
    perspective,
    shifted_perspective,
)
from .reconstruct import MfpSolution, mfp_residuals, reconstruct_solution
from .solver import (
    ContinuationResult,
    DEFAULT_SCHEDULE,
    FeasibleSet,
    SolveReport,
    SolveState,
    continuation,
    difference_coordinates,
    feasible_set,
    project_feasible,
    solve_vi,
)
from .vi_operator import (
    OperatorConfig,
    PairingBreakdown,
    apply_operator,
    default_q,
    monotonicity_gap,
    pairing_gradient,
    perspective_energy,
)
from .verify import (
    Certificate,
    ManufacturedPotential,
    TestFunctionSpec,
    apriori_certificates,
    build_test_function,
    bump_manufactured,
    minty_certificate,
    mms_source,
    mms_study,
    run_suite,
    trace_scaling_diagnostic,
)

__version__ = "0.1.0"
