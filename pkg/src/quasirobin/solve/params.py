from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from ..errors import ConfigError
from ..mesh import DiscreteFunction


class Status(str, enum.Enum):
    SOLUTION = "Solution"
    NO_SOLUTION_DETECTED = "NoSolutionDetected"
    NO_CONVERGENCE = "NoConvergence"


@dataclass(frozen=True)
class SolverParams:
    """Tolerances and guards shared by the nonlinear solvers.

    ``eta_shift`` and ``xi_hat`` default to None, meaning ||xi||_inf + 1 and
    an on-the-fly estimate respectively.
    """

    tol_grad: float = 1e-8
    max_iters: int = 20000
    newton_max_iters: int = 200
    eta_shift: float | None = None
    xi_hat: float | None = None
    divergence_norm: float = 1e6
    seed: int = 42
    n_cells: int = 256

    def __post_init__(self):
        if not self.tol_grad > 0:
            raise ConfigError("tol_grad must be positive")
        if self.max_iters < 1 or self.newton_max_iters < 1:
            raise ConfigError("iteration limits must be positive")
        if not self.divergence_norm > 0:
            raise ConfigError("divergence_norm must be positive")
        if self.n_cells < 4:
            raise ConfigError("n_cells must be >= 4")

    def eta_for(self, prob):
        eta = prob.xi_inf_norm + 1.0 if self.eta_shift is None else float(self.eta_shift)
        if not eta > prob.xi_inf_norm:
            raise ConfigError(f"eta_shift={eta} must exceed ||xi||_inf={prob.xi_inf_norm}")
        return eta

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class SolveOutcome:
    status: Status
    u: DiscreteFunction | None
    residual: float
    energy_value: float
    iterations: int
    info: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status is Status.SOLUTION

    def summary(self):
        return {
            "status": self.status.value,
            "residual": self.residual,
            "energy": self.energy_value,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class MountainPassParams:
    path_points: int = 41
    scale_factor: float = 2.0
    max_scale_doublings: int = 40
    deform_steps: int = 4000
    descent_tol: float = 1e-6
    respace_every: int = 10
    perturbation: float = 1e-3
    stall_steps: int = 200
    warmup_steps: int = 100
    level_slack: float = 0.1
    polish_failures: int = 8
    restarts: int = 4

    def __post_init__(self):
        if self.path_points < 5:
            raise ConfigError("mountain pass needs at least 5 path points")
        if not self.scale_factor > 1:
            raise ConfigError("scale_factor must exceed 1")
        if self.restarts < 1 or self.polish_failures < 1:
            raise ConfigError("restarts and polish_failures must be >= 1")
