"""Variational machinery for the mixed-derivative fractional p-Laplacian
Dirichlet problem on [0, T]: discrete fractional operators, the energy
functional and its gradient, three solution finders (direct minimization,
mountain pass, deflated multiplicity search), and a property-verification
suite for the supporting identities and embeddings.
"""

from .energy import (
    ProblemState,
    energy,
    gradient,
    monotonicity_gap,
    weak_residual,
)
from .fracops import (
    OperatorSet,
    OpKind,
    alpha_norm,
    apply,
    build_operators,
    gamma,
    gl_weights,
)
from .grid import (
    FracParams,
    Grid,
    GridFunction,
    lp_norm,
    make_grid,
    sup_norm,
)
from .nonlinearity import (
    CoefficientFn,
    ExtrapolationError,
    Family,
    HypothesisReport,
    NonlinearitySpec,
    sublinear_power,
    superlinear_power,
    table_spec,
    validate_hypotheses,
)
from .solvers import (
    GeometryError,
    MultiplicityReport,
    RegularityResult,
    SolveReport,
    minimize_direct,
    mountain_pass,
    multiplicity_search,
    regularity_check,
)
from .verify import PropertyId, VerificationReport, run_suite, verify

__version__ = "0.1.0"

__all__ = [
    "FracParams",
    "Grid",
    "GridFunction",
    "make_grid",
    "lp_norm",
    "sup_norm",
    "gamma",
    "gl_weights",
    "OpKind",
    "OperatorSet",
    "build_operators",
    "apply",
    "alpha_norm",
    "Family",
    "CoefficientFn",
    "NonlinearitySpec",
    "ExtrapolationError",
    "HypothesisReport",
    "sublinear_power",
    "superlinear_power",
    "table_spec",
    "validate_hypotheses",
    "ProblemState",
    "energy",
    "gradient",
    "weak_residual",
    "monotonicity_gap",
    "SolveReport",
    "MultiplicityReport",
    "RegularityResult",
    "GeometryError",
    "minimize_direct",
    "mountain_pass",
    "multiplicity_search",
    "regularity_check",
    "PropertyId",
    "VerificationReport",
    "verify",
    "run_suite",
    "__version__",
]
