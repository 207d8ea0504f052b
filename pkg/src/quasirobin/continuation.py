"""Parameter sweeps along the minimal branch, detection of the critical
parameter, left-continuity diagnostics and the Picone defect."""

from __future__ import annotations

import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .eigen import EigenResult, principal_eigenpair
from .errors import (BracketError, ConfigError, NotPLaplace, NotPositive, QuasiRobinError)
from .mesh import Cone, DiscreteFunction, Mesh, c1_distance, cone_check
from .operator import OperatorKind, OperatorSpec
from .problem import ProblemSpec
from .solve.core import minimal_solution
from .solve.mountain import second_solution
from .solve.params import MountainPassParams, SolveOutcome, SolverParams, Status


def _solve_one(op, prob, lam, params, with_second, mp):
    try:
        out = minimal_solution(op, prob, lam, params)
    except ConfigError:
        raise
    except QuasiRobinError as exc:
        return SolveOutcome(Status.NO_CONVERGENCE, None, float("nan"), float("nan"), 0,
                            {"reason": f"{type(exc).__name__}: {exc}"}), None
    second = None
    if with_second and out.ok:
        try:
            second = second_solution(op, prob, lam, out.u, params, mp)
        except ConfigError:
            raise
        except QuasiRobinError as exc:
            second = SolveOutcome(Status.NO_CONVERGENCE, None, float("nan"), float("nan"), 0,
                                  {"reason": f"{type(exc).__name__}: {exc}"})
    return out, second


def _solve_task(args):
    return _solve_one(*args)


@dataclass
class SolutionBranch:
    lambda_grid: np.ndarray
    outcomes: list
    second: list
    eigen_ref: EigenResult | None = None
    lambda_star_estimate: tuple | None = None
    violations: list = field(default_factory=list)

    @property
    def solved(self):
        return [(lam, o) for lam, o in zip(self.lambda_grid, self.outcomes) if o.ok]

    def increments(self):
        """Nodal min(u_j - u_i) for consecutive solved parameters."""
        sol = self.solved
        return [(a[0], b[0], float(np.min(b[1].u.values - a[1].u.values))) for a, b in zip(sol, sol[1:])]

    def rows(self):
        out = []
        for k, (lam, o) in enumerate(zip(self.lambda_grid, self.outcomes)):
            s = self.second[k]
            out.append({
                "lambda": float(lam),
                "status": o.status.value,
                "u_min_at_nodes_file": f"profile_{k:03d}.csv" if o.ok else "",
                "uinf_norm": o.u.sup() if o.u is not None else float("nan"),
                "energy": float(o.energy_value),
                "residual": float(o.residual),
                "second_solution_status": s.status.value if s is not None else "",
            })
        return out


def _validate(branch: SolutionBranch):
    issues = []
    statuses = [o.status for o in branch.outcomes]
    solved_lams = [lam for lam, s in zip(branch.lambda_grid, statuses) if s is Status.SOLUTION]
    if solved_lams:
        top = max(solved_lams)
        for lam, s in zip(branch.lambda_grid, statuses):
            if s is Status.NO_SOLUTION_DETECTED and lam < top:
                issues.append({"kind": "half_line", "lambda": float(lam),
                               "detail": f"no solution at {lam:g} but solved at {top:g}"})
    for lo, hi, inc in branch.increments():
        if not inc > 0:
            issues.append({"kind": "strict_increase", "lambda": float(hi),
                           "detail": f"min(u[{hi:g}] - u[{lo:g}]) = {inc:.3e}"})
    return issues


def _picklable(*objs):
    try:
        pickle.dumps(objs)
        return True
    except Exception:
        return False


def sweep(op: OperatorSpec, prob: ProblemSpec, lambda_grid, params: SolverParams = SolverParams(),
          threads: int | None = None, with_second: bool = False,
          mp: MountainPassParams = MountainPassParams(), eigen: bool = True) -> SolutionBranch:
    """Minimal solutions over an ascending parameter grid.

    Solves run in worker processes when ``threads`` > 1 and the specs can be
    pickled; results are gathered in grid order either way. Violations of the
    half-line structure or of strict nodal increase are recorded on the
    branch, not raised.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ConfigError("lambda_grid must be a non-empty 1D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("lambda_grid must be strictly ascending")
    threads = (os.cpu_count() or 1) if threads is None else int(threads)
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    tasks = [(op, prob, float(lam), params, with_second, mp) for lam in grid]
    if threads > 1 and grid.size > 1 and _picklable(op, prob, params):
        with ProcessPoolExecutor(max_workers=min(threads, grid.size)) as pool:
            results = list(pool.map(_solve_task, tasks))
    else:
        results = [_solve_task(t) for t in tasks]
    ref = None
    if eigen:
        ref = principal_eigenpair(prob.p, prob, n_cells=params.n_cells)
    branch = SolutionBranch(grid, [r[0] for r in results], [r[1] for r in results], ref)
    branch.violations = _validate(branch)
    return branch


@dataclass
class LambdaStar:
    lo: float
    hi: float
    evaluations: int
    history: list = field(default_factory=list)

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x):
        return self.lo <= x <= self.hi

    def as_dict(self):
        return {"lo": self.lo, "hi": self.hi, "evaluations": self.evaluations}


def detect_lambda_star(op: OperatorSpec, prob: ProblemSpec, bracket, tol_lambda: float = 1e-2,
                       params: SolverParams = SolverParams(), max_expansions: int = 8) -> LambdaStar:
    """Bisect on the outcome of ``minimal_solution`` until the bracket is
    narrower than ``tol_lambda``.

    The lower end must be solvable and the upper end not; each end that fails
    is pushed outwards by a doubling step, at most ``max_expansions`` times.
    NoConvergence at a midpoint is treated as NoSolutionDetected, which can
    only shrink the returned interval from above.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ConfigError("bracket must satisfy lo < hi")
    if not tol_lambda > 0:
        raise ConfigError("tol_lambda must be positive")
    history = []

    def solvable(lam):
        try:
            out = minimal_solution(op, prob, lam, params)
            ok = out.ok
            tag = out.status.value
        except ConfigError:
            raise
        except QuasiRobinError as exc:
            ok, tag = False, type(exc).__name__
        history.append((lam, tag))
        return ok

    width = hi - lo
    lo_ok = solvable(lo)
    hi_ok = solvable(hi)
    for _ in range(max_expansions):
        if lo_ok and not hi_ok:
            break
        if not lo_ok:
            lo_new = lo - width
            hi, hi_ok = lo, False
            lo, width = lo_new, 2 * width
            lo_ok = solvable(lo)
        else:
            lo, lo_ok = hi, True
            hi, width = hi + width, 2 * width
            hi_ok = solvable(hi)
    if not (lo_ok and not hi_ok):
        raise BracketError(f"no valid bracket after {max_expansions} expansions (last [{lo:g}, {hi:g}])")
    while hi - lo > tol_lambda:
        mid = 0.5 * (lo + hi)
        if solvable(mid):
            lo = mid
        else:
            hi = mid
    return LambdaStar(lo, hi, len(history), history)


@dataclass
class ContinuityReport:
    lam: float
    deltas: list
    distances: list

    @property
    def nonincreasing(self):
        d = self.distances
        return all(b <= a for a, b in zip(d, d[1:]))

    @property
    def passed(self):
        return self.nonincreasing and bool(self.distances) and self.distances[-1] < 1e-4


def check_left_continuity(op: OperatorSpec, prob: ProblemSpec, lam: float, deltas,
                          params: SolverParams = SolverParams(), base: SolveOutcome | None = None) -> ContinuityReport:
    deltas = [float(d) for d in deltas]
    if any(d < 0 for d in deltas):
        raise ConfigError("deltas must be nonnegative")
    if any(b > a for a, b in zip(deltas, deltas[1:])):
        raise ConfigError("deltas must be nonincreasing")
    ref = base or minimal_solution(op, prob, lam, params)
    if not ref.ok:
        raise ConfigError(f"no minimal solution at lambda={lam:g} ({ref.status.value})")
    mesh = ref.u.mesh
    dist = []
    for d in deltas:
        if d == 0:
            dist.append(0.0)
            continue
        out = minimal_solution(op, prob, lam - d, params, mesh=mesh)
        if not out.ok:
            raise ConfigError(f"no minimal solution at lambda={lam - d:g} ({out.status.value})")
        dist.append(c1_distance(out.u, ref.u))
    return ContinuityReport(lam, deltas, dist)


def picone_defect(res: EigenResult, u: DiscreteFunction, prob: ProblemSpec,
                  op: OperatorSpec | None = None) -> float:
    """Integral of |Dv|^p - |Du|^(p-2) Du . D(v^p / u^(p-1)) with v the
    eigenfunction, evaluated cell by cell on the piecewise linear data."""
    if op is not None and op.kind is not OperatorKind.P_LAPLACE:
        raise NotPLaplace("the Picone identity is only implemented for the p-Laplacian")
    p = res.r
    if op is not None and op.p != p:
        raise NotPLaplace(f"eigenpair exponent {p} differs from operator exponent {op.p}")
    if cone_check(u) is not Cone.IN_D_PLUS:
        raise NotPositive("u must be strictly positive at every node")
    if not res.u1.mesh.same_as(u.mesh):
        raise ConfigError("eigenfunction and u must share a mesh")
    v = np.abs(res.u1.values)
    w = v ** p / u.values ** (p - 1)
    h = u.mesh.h
    sv, su, sw = np.diff(v) / h, u.slopes, np.diff(w) / h
    flux = np.zeros_like(su)
    nz = su != 0
    flux[nz] = np.abs(su[nz]) ** (p - 2) * su[nz]
    return float(h * np.sum(np.abs(sv) ** p - flux * sw))
