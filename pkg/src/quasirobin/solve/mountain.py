"""Path-deformation mountain pass and the second positive solution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from ..energy import Family, FunctionalSpec, build
from ..errors import ConfigError, NoConvergence, PathCollapse, PreconditionError
from ..mesh import DiscreteFunction, c1_distance
from ..operator import OperatorSpec
from ..problem import ProblemSpec
from .core import residual
from .engine import newton_root
from .params import MountainPassParams, SolveOutcome, SolverParams, Status


@dataclass
class PassResult:
    x: np.ndarray
    level: float
    grad_norm: float
    steps: int
    converged: bool
    history: list = field(default_factory=list)


def _respace(path):
    """Redistribute path points uniformly in arclength (piecewise linear)."""
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0:
        return path
    target = np.linspace(0.0, s[-1], path.shape[0])
    out = np.empty_like(path)
    for k in range(path.shape[1]):
        out[:, k] = np.interp(target, s, path[:, k])
    return out


def path_mountain_pass(value, grad, x_low, x_high, mp: MountainPassParams, precond=None, polish=None,
                       tol=1e-8, rng=None, basin_radius=None):
    """Elastic-string search for a min-max point between ``x_low`` and ``x_high``.

    Each step moves the highest interior path point down its (preconditioned)
    gradient with a backtracking line search; the path is re-spaced by
    arclength every ``mp.respace_every`` steps. ``polish(x)`` (returning
    (x, converged)) is tried whenever the gradient at the path maximum has
    dropped by another factor of ten, is below ``mp.descent_tol`` or has not
    halved for ``mp.stall_steps`` steps. The polished point is kept only if its
    level is close to the current path maximum.
    """
    x_low = np.asarray(x_low, dtype=float)
    x_high = np.asarray(x_high, dtype=float)
    precond = precond or (lambda g: g)
    rng = rng or np.random.default_rng(0)
    m = mp.path_points
    ts = np.linspace(0.0, 1.0, m)
    path = (1 - ts)[:, None] * x_low[None, :] + ts[:, None] * x_high[None, :]
    span = float(np.max(np.abs(x_high - x_low)))
    if mp.perturbation > 0 and x_low.size > 1:
        bump = rng.standard_normal(x_low.size)
        w = min(9, x_low.size)
        bump = np.convolve(bump, np.ones(w) / w, mode="same")
        bump *= mp.perturbation * span / max(float(np.max(np.abs(bump))), 1e-300)
        path[1:-1] += np.sin(np.pi * ts[1:-1])[:, None] * bump[None, :]
    E = np.array([value(p) for p in path])
    e_low = E[0]
    radius = 1e-3 * span if basin_radius is None else basin_radius
    alpha = 1.0
    collapse = 0
    next_polish = 0.0
    best_gn, best_step = np.inf, 0
    failures = 0
    history = []
    for step in range(1, mp.deform_steps + 1):
        j = 1 + int(np.argmax(E[1:-1]))
        x = path[j]
        g = grad(x)
        gn = float(np.max(np.abs(g)))
        history.append((E[j], gn))
        if np.max(np.abs(x - x_low)) < radius or E[j] <= e_low:
            collapse += 1
            if collapse >= m:
                raise PathCollapse(f"path maximum fell into the basin of the low point after {step} steps")
        else:
            collapse = 0
        if step == mp.warmup_steps + 1:
            next_polish = 0.1 * gn
        if gn < 0.5 * best_gn:
            best_gn, best_step = gn, step
        stalled = step - best_step >= mp.stall_steps
        if polish is not None and step > mp.warmup_steps and (gn < mp.descent_tol or gn < next_polish or stalled):
            next_polish = 0.1 * gn
            best_gn, best_step = gn, step
            xp, ok = polish(x)
            if not ok:
                failures += 1
                if failures >= mp.polish_failures:
                    # the string keeps feeding a point Newton cannot settle; give up on this path
                    return PassResult(x, E[j], gn, step, False, history)
            # a min-max point cannot sit far above the maximum of an admissible
            # path; the slack covers the sampling of the string between nodes
            if ok and np.max(np.abs(xp - x_low)) > radius:
                ep = value(xp)
                if ep <= E[j] + mp.level_slack * max(E[j] - e_low, 1e-12):
                    gp = float(np.max(np.abs(grad(xp))))
                    return PassResult(xp, ep, gp, step, gp < tol, history)
        if gn < tol:
            return PassResult(x, E[j], gn, step, True, history)
        d = precond(g)
        slope = float(np.dot(g, d))
        # keep the move within the local path spacing so the string stays connected
        spacing = max(np.max(np.abs(path[j] - path[j - 1])), np.max(np.abs(path[j + 1] - path[j])))
        dmax = float(np.max(np.abs(d)))
        if dmax > 0:
            alpha = min(alpha, spacing / dmax)
        while True:
            xn = x - alpha * d
            en = value(xn)
            if np.isfinite(en) and en <= E[j] - 1e-4 * alpha * slope:
                break
            alpha *= 0.5
            if alpha < 1e-14:
                xn, en = x, E[j]
                break
        path[j], E[j] = xn, en
        alpha = min(alpha * 1.5, 1e3)
        if step % mp.respace_every == 0:
            path = _respace(path)
            path[0], path[-1] = x_low, x_high
            E = np.array([value(p) for p in path])
    j = 1 + int(np.argmax(E[1:-1]))
    gn = float(np.max(np.abs(grad(path[j]))))
    return PassResult(path[j], E[j], gn, mp.deform_steps, gn < tol, history)


def _sobolev_precond(mesh):
    """Solve (K + M) d = g with stiffness K and lumped mass M."""
    h = mesh.h
    n = mesh.n_nodes
    ab = np.zeros((3, n))
    diag = np.asarray(mesh.weights).copy()
    diag[:-1] += 1.0 / h
    diag[1:] += 1.0 / h
    ab[0, 1:] = -1.0 / h
    ab[1] = diag
    ab[2, :-1] = -1.0 / h
    return lambda g: solve_banded((1, 1), ab, g)


def mountain_pass(spec: FunctionalSpec, op: OperatorSpec, prob: ProblemSpec, u_low: DiscreteFunction,
                  params: SolverParams = SolverParams(), mp: MountainPassParams = MountainPassParams(),
                  direction=None) -> SolveOutcome:
    """Mountain-pass critical point of ``spec`` seen from the local minimizer
    ``u_low``; the far endpoint is t * direction (default the constant 1)."""
    if spec.family not in (Family.SUPER_PSI, Family.TRUNC_FLOOR, Family.ROBIN_W):
        raise ConfigError("mountain pass needs a superlinear or floor-truncated energy")
    mesh = u_low.mesh
    fun = build(spec, op, prob, mesh)
    x_low = np.asarray(u_low.values)
    e_low = fun.value(x_low)
    e = np.ones(mesh.n_nodes) if direction is None else np.asarray(getattr(direction, "values", direction))
    t = 2.0 * max(float(np.max(np.abs(x_low))), 1e-3)
    for _ in range(mp.max_scale_doublings):
        if fun.value(t * e) < e_low:
            break
        t *= mp.scale_factor
    else:
        raise NoConvergence("no endpoint with energy below the low point along the ray")
    x_high = t * e

    def polish(x):
        r = newton_root(fun, x, tol=params.tol_grad, max_iters=params.newton_max_iters)
        return r.x, r.converged

    # a fresh random path perturbation per attempt; seeded, so reruns repeat
    for attempt in range(mp.restarts):
        res = path_mountain_pass(fun.value, fun.grad, x_low, x_high, mp, precond=_sobolev_precond(mesh),
                                 polish=polish, tol=params.tol_grad,
                                 rng=np.random.default_rng([params.seed, attempt]))
        if res.converged:
            break
    u = DiscreteFunction(mesh, res.x)
    info = {"level": res.level, "low_level": e_low, "gap": res.level - e_low, "endpoint_scale": t,
            "steps": res.steps, "attempts": attempt + 1}
    if not res.converged:
        return SolveOutcome(Status.NO_CONVERGENCE, u, res.grad_norm, res.level, res.steps, info)
    return SolveOutcome(Status.SOLUTION, u, res.grad_norm, res.level, res.steps, info)


def second_solution(op: OperatorSpec, prob: ProblemSpec, lam: float, u_min: DiscreteFunction,
                    params: SolverParams = SolverParams(), mp: MountainPassParams = MountainPassParams()) -> SolveOutcome:
    """Second positive solution above ``u_min`` via the floor-truncated energy."""
    if not prob.flags.superlinear_H2:
        raise PreconditionError("second solutions are only sought for superlinear perturbations")
    spec = FunctionalSpec(Family.TRUNC_FLOOR, lam=lam, eta=params.eta_for(prob), barrier=u_min)
    out = mountain_pass(spec, op, prob, u_min, params, mp)
    if out.status is not Status.SOLUTION:
        return out
    u = out.u
    gap = float(np.min(u.values - u_min.values))
    dist = c1_distance(u, u_min)
    out.info.update(order_gap=gap, c1_distance=dist)
    out.residual = residual(op, prob, lam, u)
    if gap < -1e-9 or dist <= 1e-6 or out.residual >= params.tol_grad:
        out.status = Status.NO_CONVERGENCE
        out.info["reason"] = "mountain-pass point is not a distinct solution above the barrier"
    return out
