"""Vortices and gravitating vortices on the flat torus and the round sphere."""

__version__ = "0.1.0"

from gravvortex.errors import (
    DegenerateLattice,
    GravVortexError,
    GridKindMismatch,
    GridMismatch,
    InvalidDivisor,
    KahlerPositivityLost,
    NonConvergence,
    PreconditionError,
    ResolutionTooSmall,
    StepUnderflow,
)
from gravvortex.higgs import (
    Divisor,
    StabilityClass,
    bradlow_admissible,
    classify_divisor,
    higgs_norm,
    higgs_norm_sphere,
    higgs_norm_torus,
    hilbert_mumford_destabilized_exponent,
    parse_divisor,
)
from gravvortex.surface import (
    SurfaceGrid,
    gradient_squared,
    integrate,
    laplacian,
    make_sphere_grid,
    make_torus_grid,
)
from gravvortex.vortex import VortexSolution, solve_vortex
from gravvortex.gravitating import (
    EstimateTrace,
    GravSolveState,
    ModelParams,
    alpha_star,
    monitor_estimates,
    residuals_gravitating,
    solve_continuity,
    solve_einstein_bogomolnyi_sphere,
    topological_c,
)
from gravvortex.futaki import (
    FutakiResult,
    check_extremal_pair,
    futaki_closed_form,
    futaki_quadrature,
    maximal_weight,
)
from gravvortex.diagnostics import AuditReport, audit_state, sigma_one_form, weight_along_flow
