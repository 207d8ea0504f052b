"""Minimization, the auxiliary barrier problem and the monotone iteration that
produces the smallest positive solution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ..energy import Family, FunctionalSpec, NodalFunctional, _AbsPow, _Linear, build
from ..errors import CoefficientSearchFailed, ConfigError, MonotoneViolation
from ..mesh import Cone, DiscreteFunction, Mesh, c1_distance, cone_check
from ..operator import OperatorSpec
from ..problem import PerturbationKind, ProblemSpec, estimate_xi_hat
from .engine import newton_minimize, newton_root
from .params import SolveOutcome, SolverParams, Status


def _mesh_for(prob, params, init=None):
    if init is not None:
        return init.mesh
    return Mesh.on(prob.interval, params.n_cells)


def _outcome_from(fun, x, converged, iters, params, trace=None, extra=None):
    mesh = fun.mesh
    g = float(np.max(np.abs(fun.grad(x))))
    u = DiscreteFunction(mesh, x)
    info = {"energy_trace": trace or []}
    if extra:
        info.update(extra)
    if not converged:
        if np.max(np.abs(x)) > params.divergence_norm:
            return SolveOutcome(Status.NO_SOLUTION_DETECTED, u, g, fun.value(x), iters, {**info, "reason": "diverged"})
        return SolveOutcome(Status.NO_CONVERGENCE, u, g, fun.value(x), iters, info)
    cone = cone_check(u)
    info["cone"] = cone.value
    if cone is not Cone.IN_D_PLUS:
        return SolveOutcome(Status.NO_SOLUTION_DETECTED, u, g, fun.value(x), iters,
                            {**info, "reason": "zero or sign-changing critical point"})
    return SolveOutcome(Status.SOLUTION, u, g, fun.value(x), iters, info)


def minimize(spec: FunctionalSpec, op: OperatorSpec, prob: ProblemSpec, init: DiscreteFunction,
             params: SolverParams = SolverParams()) -> SolveOutcome:
    """Local minimizer of a coercive discrete functional.

    A converged point whose negative part is below 1e-10 is clipped to its
    positive part and polished again. Only strictly positive critical points
    count as solutions.
    """
    if spec.family is Family.MU:
        raise ConfigError("mu is not a coercive energy to minimize")
    fun = build(spec, op, prob, init.mesh)
    res = newton_minimize(fun, init.values, tol=params.tol_grad, max_iters=params.newton_max_iters,
                          divergence=params.divergence_norm)
    x, trace, iters = res.x, list(res.trace), res.iterations
    if res.converged and np.min(x) < 0 and np.max(np.maximum(-x, 0.0)) < 1e-10:
        again = newton_minimize(fun, np.maximum(x, 0.0), tol=params.tol_grad, max_iters=params.newton_max_iters)
        x, iters = again.x, iters + again.iterations
        trace += again.trace[1:]
        res = again
    if res.converged:
        # the gradient carries the lumped mass, so nodal errors can exceed the
        # tolerance by 1/h; a few quadratic steps past it remove that
        pol = newton_root(fun, x, tol=1e-3 * params.tol_grad, max_iters=5)
        if pol.grad_norm < res.grad_norm and np.min(pol.x) >= min(0.0, float(np.min(x))):
            x = pol.x
    return _outcome_from(fun, x, res.converged, iters, params, trace)


def phi_functional(op, prob, lam, mesh, eta=None):
    eta = prob.xi_inf_norm + 1.0 if eta is None else eta
    return build(FunctionalSpec(Family.PHI_LAMBDA, lam=lam, eta=eta), op, prob, mesh)


def residual(op: OperatorSpec, prob: ProblemSpec, lam: float, u: DiscreteFunction) -> float:
    """max-norm of the discrete weak residual of the equation at u (u >= 0)."""
    fun = phi_functional(op, prob, lam, u.mesh)
    return float(np.max(np.abs(fun.grad(np.maximum(u.values, 0.0)))))


# -- auxiliary barrier problem ----------------------------------------------------


@dataclass
class AuxCoefficients:
    c9: float
    c10: float
    q: float
    r: float
    certified: bool

    def as_tuple(self):
        return (self.c9, self.c10, self.q, self.r)


def _reaction_floor(prob, lam, x):
    """min over sampled z of lam x^(p-1) + f(z, x)."""
    p = prob.p
    if prob.perturbation.kind is PerturbationKind.CUSTOM:
        zs = np.linspace(prob.interval[0], prob.interval[1], 9)
        f = np.min([prob.perturbation.f(x, z) for z in zs], axis=0)
    else:
        f = prob.perturbation.f(x)
    return lam * x ** (p - 1) + f


def _excess(prob, lam, c9, q, r, t):
    """(c9 t^(q-1) - g(t)) / t^(r-1), discounting the rounding error of the
    difference so that cancellation at tiny t is not read as a violation."""
    a = c9 * t ** (q - 1)
    g = _reaction_floor(prob, lam, t)
    slack = 8 * np.finfo(float).eps * (np.abs(a) + np.abs(g))
    return (a - g - slack) / t ** (r - 1)


def _refined_max(fn, x):
    """Grid maximum of fn, polished by a bounded scalar search in log x
    around the best grid point so that peaks between nodes are not missed."""
    vals = fn(x)
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = np.log(x[max(i - 1, 0)]), np.log(x[min(i + 1, x.size - 1)])
    if hi > lo:
        res = optimize.minimize_scalar(lambda s: -float(fn(np.array([np.exp(s)]))[0]), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12})
        if np.isfinite(res.fun):
            best = max(best, -float(res.fun))
    return best


def certify_coefficients(prob: ProblemSpec, lam: float, params: SolverParams, mesh=None,
                         limit: float = 1e6) -> AuxCoefficients:
    """Pick (c9, c10) with lam x^(p-1) + f(x) >= c9 x^(q-1) - c10 x^(r-1) on a
    log grid, preferring the largest constant-state amplitude (c9/c10)^(1/(r-q))."""
    exps = prob.perturbation.aux_exponents(prob.p)
    if exps is None:
        raise CoefficientSearchFailed("perturbation does not declare auxiliary exponents q_aux/r_aux")
    q, r = exps
    x = np.logspace(-8.0, np.log10(10.0 * params.divergence_norm), 512)
    lam1 = None
    if abs(q - prob.p) < 1e-12:
        from ..eigen import principal_eigenpair

        absprob = ProblemSpec(prob.interval, np.abs(prob.xi_at(np.linspace(*prob.interval, 257))),
                              prob.beta, prob.perturbation, prob.p)
        lam1 = principal_eigenpair(prob.p, absprob, n_cells=mesh.n_cells if mesh else params.n_cells).lambda1
    best = None
    for k in range(-12, 25):
        c9 = 10.0 ** (k / 4)
        if lam1 is not None and not c9 > lam1 * (1 + 1e-6) + 1e-12:
            continue
        need = _refined_max(lambda t, c9=c9: _excess(prob, lam, c9, q, r, t), x)
        # slack so exact identities (c9 = 1 for 2x - x^3) still certify
        c10 = max(need * (1 + 1e-9) + 1e-14, 1e-6)
        if c10 > limit:
            continue
        amp = (c9 / c10) ** (1.0 / (r - q))
        if best is None or amp > best[0] * (1 + 1e-12):
            best = (amp, c9, c10)
    if best is None:
        raise CoefficientSearchFailed(f"no (c9, c10) <= {limit:g} certifies the lower bound at lambda={lam}")
    return AuxCoefficients(best[1], best[2], q, r, True)


def solve_auxiliary(op: OperatorSpec, prob: ProblemSpec, lam: float, params: SolverParams = SolverParams(),
                    coeffs=None, init: DiscreteFunction | None = None, mesh: Mesh | None = None):
    """Unique positive solution of the barrier problem with reaction
    c9 u^(q-1) - c10 u^(r-1); returns (outcome, AuxCoefficients)."""
    mesh = mesh or _mesh_for(prob, params, init)
    if coeffs is None:
        ac = certify_coefficients(prob, lam, params, mesh)
    elif isinstance(coeffs, AuxCoefficients):
        ac = coeffs
    else:
        c9, c10, q, r = coeffs
        ac = AuxCoefficients(float(c9), float(c10), float(q), float(r), False)
    spec = FunctionalSpec(Family.AUX_PSI, aux_coeffs=ac.as_tuple())
    if init is None:
        amp = (ac.c9 / ac.c10) ** (1.0 / (ac.r - ac.q))
        init = mesh.constant(min(amp, params.divergence_norm))
    out = minimize(spec, op, prob, init, params)
    out.info["aux"] = ac
    return out, ac


# -- monotone iteration -------------------------------------------------------------


def _inner_functional(op, prob, mesh, eta_hat, rhs):
    """u -> int G(Du) + (1/p) int (xi + eta_hat)|u|^p + boundary - int rhs u."""
    p = prob.p
    xi = prob.xi_at(mesh.nodes)
    return NodalFunctional(op, mesh, 1.0, [_AbsPow(xi + eta_hat, p), _Linear(-rhs)], prob.beta, 1.0 / p, p)


def _xi_hat(prob, params, rho):
    if params.xi_hat is not None:
        return float(params.xi_hat)
    return estimate_xi_hat(prob, rho)


def _eta_hat(prob, params, lam, xi_hat):
    # lam + eta_hat >= xi_hat keeps the frozen reaction monotone
    return max(params.eta_for(prob), xi_hat + 1.0 + max(-lam, 0.0))


@dataclass
class _Iter:
    eta_hat: float
    rho: float
    steps: int = 0
    min_increment: float = field(default=np.inf)


def _monotone_run(op, prob, lam, u0, params, eta_hat, rho, log):
    mesh = u0.mesh
    p = prob.p
    tol = params.tol_grad
    inner_tol = 0.1 * tol
    state = _Iter(eta_hat, rho)
    u = np.array(u0.values)
    incs = []
    phi = None
    for k in range(1, params.max_iters + 1):
        if np.max(u) > state.rho:
            state.rho = 2.0 * np.max(u)
            xh = _xi_hat(prob, params, state.rho)
            new_eta = _eta_hat(prob, params, lam, xh)
            if new_eta > state.eta_hat:
                state.eta_hat = new_eta
                phi = None
        rhs = (lam + state.eta_hat) * u ** (p - 1) + prob.perturbation.f(u, mesh.nodes)
        fun = _inner_functional(op, prob, mesh, state.eta_hat, rhs)
        res = newton_minimize(fun, u, tol=inner_tol, max_iters=params.newton_max_iters)
        v = res.x
        drop = float(np.min(v - u))
        state.min_increment = min(state.min_increment, drop)
        if drop < -1e-9:
            return "violation", u, state, k
        v = np.maximum(v, u)
        state.steps = k
        if np.max(v) > params.divergence_norm:
            return "diverged", v, state, k
        dist = c1_distance(DiscreteFunction(mesh, v), DiscreteFunction(mesh, u))
        incs.append(float(np.max(v - u)))
        u_prev, u = u, v
        if dist < tol:
            return "converged", u, state, k
        if k >= 30 and k % 25 == 0 and len(incs) >= 6:
            r = np.array(incs[-6:])
            if np.all(r[:-1] > 0):
                ratios = r[1:] / r[:-1]
                rho_c = float(ratios[-1])
                if rho_c < 1.0 and np.ptp(ratios) < 1e-3 * max(rho_c, 1e-3):
                    delta = u - u_prev
                    v0 = u + delta * rho_c / (1.0 - rho_c)
                    if phi is None:
                        phi = phi_functional(op, prob, lam, mesh, eta=state.eta_hat)
                    pol = newton_root(phi, v0, tol=tol, max_iters=params.newton_max_iters)
                    jump = float(np.max(np.abs(v0 - u)))
                    if (pol.converged and np.min(pol.x - u) >= -1e-9
                            and float(np.max(np.abs(pol.x - v0))) <= 0.5 * jump + 1e-6):
                        log["accelerated_at"] = k
                        return "converged", pol.x, state, k
    return "max_iters", u, state, params.max_iters


def minimal_solution(op: OperatorSpec, prob: ProblemSpec, lam: float, params: SolverParams = SolverParams(),
                     mesh: Mesh | None = None, u_star: DiscreteFunction | None = None) -> SolveOutcome:
    """Smallest positive solution at parameter ``lam`` via monotone iteration
    from the auxiliary barrier u*."""
    mesh = mesh or Mesh.on(prob.interval, params.n_cells)
    if u_star is None:
        aux, ac = solve_auxiliary(op, prob, lam, params, mesh=mesh)
        if aux.status is not Status.SOLUTION:
            return SolveOutcome(aux.status, aux.u, aux.residual, aux.energy_value, aux.iterations,
                                {"stage": "auxiliary", **aux.info})
        u_star = aux.u
    else:
        ac = None
    rho = 2.0 * float(np.max(u_star.values))
    xh = _xi_hat(prob, params, rho)
    eta_hat = _eta_hat(prob, params, lam, xh)
    log = {"u_star": u_star, "aux": ac}
    for attempt in range(2):
        status, x, state, k = _monotone_run(op, prob, lam, u_star, params, eta_hat, rho, log)
        if status != "violation":
            break
        eta_hat *= 2.0
    else:
        raise MonotoneViolation(f"monotone iteration decreased by {-state.min_increment:.2e} "
                                f"even with eta_hat={eta_hat / 2:.3g}")
    log.update(eta_hat=state.eta_hat, monotone_steps=k, min_increment=state.min_increment, attempts=attempt + 1)
    phi = phi_functional(op, prob, lam, mesh, eta=state.eta_hat)
    u = DiscreteFunction(mesh, x)
    if status == "diverged":
        return SolveOutcome(Status.NO_SOLUTION_DETECTED, u, float(np.max(np.abs(phi.grad(x)))), phi.value(x), k,
                            {**log, "reason": "diverged"})
    if status == "max_iters":
        return SolveOutcome(Status.NO_SOLUTION_DETECTED, u, float(np.max(np.abs(phi.grad(x)))), phi.value(x), k,
                            {**log, "reason": "no stabilization within max_iters"})
    if float(np.max(np.abs(phi.grad(x)))) >= params.tol_grad:
        pol = newton_root(phi, x, tol=params.tol_grad, max_iters=params.newton_max_iters)
        if pol.converged and np.min(pol.x - x) >= -1e-9:
            x = pol.x
    u = DiscreteFunction(mesh, x)
    res = residual(op, prob, lam, u)
    cone = cone_check(u)
    status = Status.SOLUTION if res < params.tol_grad and cone is Cone.IN_D_PLUS else Status.NO_CONVERGENCE
    return SolveOutcome(status, u, res, phi.value(x), k, {**log, "cone": cone.value})


# -- uniqueness probe ---------------------------------------------------------------


@dataclass
class UniquenessReport:
    clusters: list
    outcomes: list
    class_flag: bool
    threshold: float

    @property
    def n_clusters(self):
        return len(self.clusters)


def cluster(functions, threshold):
    reps = []
    for u in functions:
        if not any(c1_distance(u, r) < threshold for r in reps):
            reps.append(u)
    return reps


def multistart_uniqueness(op: OperatorSpec, prob: ProblemSpec, lam: float, n_starts: int = 10,
                          params: SolverParams = SolverParams(), threshold: float = 1e-5,
                          mesh: Mesh | None = None) -> UniquenessReport:
    mesh = mesh or Mesh.on(prob.interval, params.n_cells)
    rng = np.random.default_rng(params.seed)
    eta = params.eta_for(prob)
    spec = FunctionalSpec(Family.PHI_LAMBDA, lam=lam, eta=eta)
    outs = []
    for _ in range(n_starts):
        scale = 10.0 ** rng.uniform(-2, 2)
        init = mesh.function(scale * rng.uniform(0.1, 1.0, mesh.n_nodes))
        outs.append(minimize(spec, op, prob, init, params))
    sols = [o.u for o in outs if o.ok]
    return UniquenessReport(cluster(sols, threshold), outs, prob.flags.unique_H1pp, threshold)
