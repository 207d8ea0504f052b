"""Principal Robin eigenpair of the r-Laplacian with potential xi."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .energy import NodalFunctional, _AbsPow, _Linear, mu_r, rayleigh
from .errors import ConfigError, NoConvergence
from .mesh import DiscreteFunction, Mesh, c1_distance, lp_power
from .operator import OperatorSpec
from .problem import ProblemSpec
from .solve.engine import newton_minimize


@dataclass
class EigenResult:
    lambda1: float
    u1: DiscreteFunction
    iterations: int
    residual: float
    r: float = 2.0

    def as_dict(self):
        return {"lambda1": self.lambda1, "residual": self.residual, "iterations": self.iterations, "r": self.r}


def _normalize(mesh, v, r):
    v = np.abs(v)
    return v / lp_power(DiscreteFunction(mesh, v), r) ** (1.0 / r)


def eigen_residual(r, prob, u: DiscreteFunction, lam):
    """max-norm of grad((1/r) mu_r)(u) - lam * w |u|^(r-2) u."""
    fun = mu_r(r, prob, u.mesh)
    g = fun.grad(u.values) / r
    w = np.asarray(u.mesh.weights)
    return float(np.max(np.abs(g - lam * w * np.abs(u.values) ** (r - 1) * np.sign(u.values))))


def _linear_step(mesh, prob, shift, rhs):
    """Solve (K + W(xi + s) + B) u = rhs for r = 2."""
    h = mesh.h
    w = np.asarray(mesh.weights)
    xi = prob.xi_at(mesh.nodes)
    n = mesh.n_nodes
    diag = w * (xi + shift)
    diag[:-1] += 1.0 / h
    diag[1:] += 1.0 / h
    diag[0] += prob.beta[0]
    diag[-1] += prob.beta[1]
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0 / h
    ab[1] = diag
    ab[2, :-1] = -1.0 / h
    return solve_banded((1, 1), ab, rhs)


def _nonlinear_step(mesh, prob, r, shift, rhs, u_start, tol):
    xi = prob.xi_at(mesh.nodes)
    op = OperatorSpec.p_laplace(r)
    fun = NodalFunctional(op, mesh, 1.0, [_AbsPow(xi + shift, r), _Linear(-rhs / np.asarray(mesh.weights))],
                          prob.beta, 1.0 / r, r)
    return newton_minimize(fun, u_start, tol=tol, max_iters=200)


def _projected_gradient(mesh, prob, r, u, lam_tol, steps=2000):
    """Fallback: gradient descent of the Rayleigh quotient on the unit sphere."""
    fun = mu_r(r, prob, mesh)
    w = np.asarray(mesh.weights)
    step = 0.1 * mesh.h
    for _ in range(steps):
        lam = fun.value(u)
        g = fun.grad(u) / r - lam * w * u ** (r - 1)
        if np.max(np.abs(g)) < lam_tol:
            break
        u = _normalize(mesh, u - step * g / w, r)
    return u


def principal_eigenpair(r: float, prob: ProblemSpec, tol: float = 1e-10, seed=None, *,
                        mesh: Mesh | None = None, n_cells: int = 256, init=None,
                        max_iters: int = 500) -> EigenResult:
    """Shifted inverse iteration for the smallest eigenvalue of
    -Delta_r u + xi |u|^(r-2) u = lam |u|^(r-2) u with Robin weights beta.

    Each step minimizes (1/r)(mu_r(u) + s ||u||_r^r) - int u_k^(r-1) u with
    s = ||xi||_inf + 1 and renormalizes in L^r. ``seed`` only matters when
    ``init`` is the string "random".
    """
    if not r > 1:
        raise ConfigError("r must exceed 1")
    if not tol > 0:
        raise ConfigError("tol must be positive")
    mesh = Mesh.on(prob.interval, n_cells) if mesh is None else mesh
    shift = prob.xi_inf_norm + 1.0
    if init is None:
        u = np.ones(mesh.n_nodes)
    elif isinstance(init, str) and init == "random":
        u = np.random.default_rng(seed).uniform(0.1, 2.0, mesh.n_nodes)
    else:
        u = np.asarray(getattr(init, "values", init), dtype=float)
    u = _normalize(mesh, u, r)
    w = np.asarray(mesh.weights)
    lam = res = np.inf
    for it in range(1, max_iters + 1):
        rhs = w * u ** (r - 1)
        if r == 2:
            v = _linear_step(mesh, prob, shift, rhs)
        else:
            out = _nonlinear_step(mesh, prob, r, shift, rhs, u, tol=1e-2 * tol)
            v = out.x
            if not out.converged and out.grad_norm > 10 * tol:
                v = _projected_gradient(mesh, prob, r, _normalize(mesh, v, r), tol)
        u = _normalize(mesh, v, r)
        uf = DiscreteFunction(mesh, u)
        lam = rayleigh(r, prob, uf)
        res = eigen_residual(r, prob, uf, lam)
        if res < tol:
            return EigenResult(lam, uf, it, res, r)
    raise NoConvergence(f"eigen iteration stalled at residual {res:.3e}", iterations=max_iters)


@dataclass
class SimplicityReport:
    max_c1_distance: float
    lambda_spread: float
    n_starts: int

    @property
    def passed(self):
        return self.max_c1_distance < 1e-6


def check_simplicity(res: EigenResult, prob: ProblemSpec, r: float, n_starts: int = 5, seed: int = 42,
                     tol: float = 1e-10) -> SimplicityReport:
    if n_starts < 5:
        raise ConfigError("check_simplicity needs n_starts >= 5")
    rng = np.random.default_rng(seed)
    mesh = res.u1.mesh
    dmax = spread = 0.0
    for _ in range(n_starts):
        init = rng.uniform(0.05, 2.0, mesh.n_nodes)
        other = principal_eigenpair(r, prob, tol=tol, mesh=mesh, init=init)
        dmax = max(dmax, c1_distance(other.u1, res.u1))
        spread = max(spread, abs(other.lambda1 - res.lambda1))
    return SimplicityReport(dmax, spread, n_starts)
