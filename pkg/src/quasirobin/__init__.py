"""Quasilinear Robin problems in one dimension: principal eigenpairs,
minimal positive solutions, mountain-pass solutions and parameter sweeps."""

__version__ = "0.1.0"

from .continuation import (LambdaStar, SolutionBranch, check_left_continuity, detect_lambda_star,  # noqa: E402
                           picone_defect, sweep)
from .eigen import EigenResult, check_simplicity, principal_eigenpair  # noqa: E402
from .energy import (DiazSaaProbe, Family, FunctionalSpec, assemble_mu, diaz_saa_convexity,  # noqa: E402
                     diaz_saa_functional, energy, gradient, rayleigh)
from .mesh import Cone, DiscreteFunction, Mesh, c1_distance, cone_check  # noqa: E402
from .operator import OperatorKind, OperatorSpec, check_hypotheses  # noqa: E402
from .problem import PerturbationSpec, ProblemSpec, TruncatedReaction  # noqa: E402
from .solve.core import (minimal_solution, minimize, multistart_uniqueness, residual,  # noqa: E402
                         solve_auxiliary)
from .solve.mountain import mountain_pass, second_solution  # noqa: E402
from .solve.params import MountainPassParams, SolveOutcome, SolverParams, Status  # noqa: E402

__all__ = [
    "Cone", "DiazSaaProbe", "DiscreteFunction", "EigenResult", "Family", "FunctionalSpec", "LambdaStar", "Mesh",
    "MountainPassParams", "OperatorKind", "OperatorSpec", "PerturbationSpec", "ProblemSpec", "SolutionBranch",
    "SolveOutcome", "SolverParams", "Status", "TruncatedReaction", "assemble_mu", "c1_distance",
    "check_hypotheses", "check_left_continuity", "check_simplicity", "cone_check", "detect_lambda_star",
    "diaz_saa_convexity", "diaz_saa_functional", "energy", "gradient", "minimal_solution", "minimize",
    "mountain_pass", "multistart_uniqueness", "picone_defect", "principal_eigenpair", "rayleigh", "residual",
    "second_solution", "solve_auxiliary", "sweep",
]
