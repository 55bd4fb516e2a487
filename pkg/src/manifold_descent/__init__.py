"""Equality-constrained minimization via manifold-attracting descent dynamics."""

from .core import (
    IterateRecord,
    Problem,
    SolverConfig,
    evaluate,
    fd_gradient,
    fd_hessian,
    fd_jacobian,
)
from .descent import SolveReport, Termination, armijo_step, solve, step_direction
from .errors import (
    LineSearchFailed,
    NonFinite,
    RankDeficient,
    SolverError,
    SpecError,
    UnknownProblem,
)
from .escape import (
    Classification,
    SecondOrderReport,
    classify,
    lagrangian_hessian,
    solve_with_escape,
)
from .flows import (
    FlowKind,
    FlowSpec,
    FlowTrace,
    check_assumptions,
    integrate,
    vector_field,
)
from .geometry import (
    GeometryEval,
    kkt_residual,
    multiplier_estimate,
    penalty,
    projected_gradient,
    tangent_projector,
)
from .problems import (
    PolynomialSpec,
    builtin,
    builtin_names,
    from_spec,
    load_spec,
    parse_spec,
    serialize_spec,
)

__version__ = "0.1.0"

__all__ = [
    "Classification",
    "FlowKind",
    "FlowSpec",
    "FlowTrace",
    "GeometryEval",
    "IterateRecord",
    "LineSearchFailed",
    "NonFinite",
    "PolynomialSpec",
    "Problem",
    "RankDeficient",
    "SecondOrderReport",
    "SolveReport",
    "SolverConfig",
    "SolverError",
    "SpecError",
    "Termination",
    "UnknownProblem",
    "armijo_step",
    "builtin",
    "builtin_names",
    "check_assumptions",
    "classify",
    "evaluate",
    "fd_gradient",
    "fd_hessian",
    "fd_jacobian",
    "from_spec",
    "integrate",
    "kkt_residual",
    "lagrangian_hessian",
    "load_spec",
    "multiplier_estimate",
    "parse_spec",
    "penalty",
    "projected_gradient",
    "serialize_spec",
    "solve",
    "solve_with_escape",
    "step_direction",
    "tangent_projector",
    "vector_field",
    "__version__",
]
