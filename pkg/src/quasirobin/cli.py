"""Command line front end: ``quasirobin COMMAND --config run.json``.

Exit codes: 0 success, 2 no solution detected, 3 audit failure,
4 configuration error, 5 solver did not converge.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import COMMANDS, RunConfig
from .continuation import detect_lambda_star, picone_defect, sweep
from .eigen import principal_eigenpair
from .errors import BracketError, ConfigError, GridError, QuasiRobinError
from .io import header_lines, write_json, write_profile, write_rows
from .mesh import Cone, DiscreteFunction, Mesh, cone_check
from .operator import OperatorKind, check_hypotheses
from .solve.core import minimal_solution, residual, solve_auxiliary
from .solve.mountain import second_solution
from .solve.params import Status

EXIT_OK, EXIT_NO_SOLUTION, EXIT_AUDIT, EXIT_CONFIG, EXIT_NO_CONVERGENCE = 0, 2, 3, 4, 5

_STATUS_EXIT = {Status.SOLUTION: EXIT_OK, Status.NO_SOLUTION_DETECTED: EXIT_NO_SOLUTION,
                Status.NO_CONVERGENCE: EXIT_NO_CONVERGENCE}


class _Ctx:
    def __init__(self, cfg: RunConfig, out: Path, threads: int | None):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.op = cfg.operator_spec()
        self.prob = cfg.problem_spec()
        self.params = cfg.solver
        self.cmd = cfg.command
        self.header = header_lines(cfg.sha256(), cfg.solver.seed, cfg.command.name)
        self.meta = {"config_sha256": cfg.sha256(), "seed": cfg.solver.seed, "command": cfg.command.name,
                     "versions": self.header[0]}

    def json(self, name, payload):
        write_json(self.out / name, payload, self.meta)

    def profile(self, name, u):
        write_profile(self.out / name, u, self.header)

    def need(self, key):
        val = getattr(self.cmd, key)
        if val is None:
            raise ConfigError(f"command {self.cmd.name!r} needs command.{'lambda' if key == 'lam' else key}")
        return val


def _outcome_payload(out):
    info = {k: v for k, v in out.info.items() if isinstance(v, (int, float, str, bool, np.floating, np.integer))}
    return {**out.summary(), "info": info}


def _cmd_hypcheck(ctx):
    grid = None
    if ctx.cmd.grid is not None:
        lo, hi, n = ctx.cmd.grid
        grid = np.logspace(float(lo), float(hi), int(n))
    try:
        rep = check_hypotheses(ctx.op, grid)
    except GridError as exc:
        raise ConfigError(str(exc)) from None
    ctx.json("hypcheck.json", rep.as_dict())
    return EXIT_OK if rep.passed else EXIT_AUDIT


def _cmd_eigen(ctx):
    r = ctx.cmd.r if ctx.cmd.r is not None else ctx.prob.p
    res = principal_eigenpair(float(r), ctx.prob, tol=ctx.cmd.eigen_tol, n_cells=ctx.params.n_cells)
    ctx.json("eigen.json", res.as_dict())
    ctx.profile("eigenfunction.csv", res.u1)
    return EXIT_OK


def _cmd_solve(ctx):
    lam = float(ctx.need("lam"))
    out = minimal_solution(ctx.op, ctx.prob, lam, ctx.params)
    ctx.json("solve.json", {"lambda": lam, **_outcome_payload(out)})
    if out.u is not None:
        ctx.profile("minimal.csv", out.u)
    return _STATUS_EXIT[out.status]


def _cmd_second(ctx):
    lam = float(ctx.need("lam"))
    low = minimal_solution(ctx.op, ctx.prob, lam, ctx.params)
    payload = {"lambda": lam, "minimal": _outcome_payload(low)}
    if not low.ok:
        ctx.json("second.json", payload)
        return _STATUS_EXIT[low.status]
    ctx.profile("minimal.csv", low.u)
    hi = second_solution(ctx.op, ctx.prob, lam, low.u, ctx.params, ctx.cmd.mp_params())
    payload["second"] = _outcome_payload(hi)
    ctx.json("second.json", payload)
    if hi.u is not None:
        ctx.profile("second.csv", hi.u)
    return _STATUS_EXIT[hi.status]


_BRANCH_COLUMNS = ["lambda", "status", "u_min_at_nodes_file", "uinf_norm", "energy", "residual",
                   "second_solution_status"]


def _cmd_sweep(ctx):
    lams = ctx.need("lambdas")
    br = sweep(ctx.op, ctx.prob, lams, ctx.params, threads=ctx.threads, with_second=ctx.cmd.with_second,
               mp=ctx.cmd.mp_params())
    rows = br.rows()
    write_rows(ctx.out / "branch.csv", rows, ctx.header, _BRANCH_COLUMNS)
    for row, o in zip(rows, br.outcomes):
        if row["u_min_at_nodes_file"]:
            ctx.profile(row["u_min_at_nodes_file"], o.u)
    ctx.json("branch.json", {
        "violations": br.violations,
        "increments": [{"lo": a, "hi": b, "min_increase": c} for a, b, c in br.increments()],
        "lambda1": br.eigen_ref.lambda1 if br.eigen_ref is not None else None,
    })
    return EXIT_OK if not br.violations else EXIT_AUDIT


def _cmd_lambda_star(ctx):
    br = ctx.need("bracket")
    try:
        ls = detect_lambda_star(ctx.op, ctx.prob, br, ctx.cmd.tol_lambda, ctx.params)
    except BracketError as exc:
        ctx.json("lambda_star.json", {"error": str(exc)})
        print(f"quasirobin: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    ctx.json("lambda_star.json", ls.as_dict())
    return EXIT_OK


def _cmd_verify(ctx):
    """Residual, cone, barrier and Picone audit of a stored profile."""
    lam = float(ctx.need("lam"))
    path = Path(ctx.need("profile"))
    if not path.is_file():
        raise ConfigError(f"profile not found: {path}")
    u = DiscreteFunction.from_csv(path.read_text())
    if (u.mesh.a, u.mesh.b) != ctx.prob.interval:
        raise ConfigError("profile interval differs from the problem interval")
    tol = ctx.params.tol_grad
    checks = {}
    res = residual(ctx.op, ctx.prob, lam, u)
    checks["residual"] = {"value": res, "passed": res < tol}
    cone = cone_check(u)
    checks["cone"] = {"value": cone.value, "passed": cone is Cone.IN_D_PLUS}
    aux, _ = solve_auxiliary(ctx.op, ctx.prob, lam, ctx.params, mesh=u.mesh)
    if aux.ok:
        gap = float(np.min(u.values - aux.u.values))
        checks["barrier"] = {"value": gap, "passed": gap >= -1e-8}
    else:
        checks["barrier"] = {"value": aux.status.value, "passed": False}
    if ctx.op.kind is OperatorKind.P_LAPLACE and cone is Cone.IN_D_PLUS:
        eig = principal_eigenpair(ctx.prob.p, ctx.prob, mesh=Mesh(u.mesh.a, u.mesh.b, u.mesh.n_cells))
        d = picone_defect(eig, u, ctx.prob, ctx.op)
        checks["picone"] = {"value": d, "passed": d >= -1e-8}
    passed = all(c["passed"] for c in checks.values())
    ctx.json("verify.json", {"lambda": lam, "passed": passed, "checks": checks})
    return EXIT_OK if passed else EXIT_AUDIT


_DISPATCH = {"hypcheck": _cmd_hypcheck, "eigen": _cmd_eigen, "solve": _cmd_solve, "second": _cmd_second,
             "sweep": _cmd_sweep, "lambda-star": _cmd_lambda_star, "verify": _cmd_verify}


def run(config_path, command: str | None = None, out: str | None = None, threads: int | None = None,
        seed: int | None = None) -> int:
    """Execute one command and return its exit code."""
    try:
        cfg = RunConfig.load(config_path).with_command(command, seed)
        outdir = Path(out if out is not None else cfg.output)
        outdir.mkdir(parents=True, exist_ok=True)
        ctx = _Ctx(cfg, outdir, threads)
        return _DISPATCH[cfg.command.name](ctx)
    except ConfigError as exc:
        print(f"quasirobin: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuasiRobinError as exc:
        print(f"quasirobin: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="quasirobin", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, default=None, help="worker processes for sweeps (default: all cores)")
    ap.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    args = ap.parse_args(argv)
    return run(args.config, args.command, args.out, args.threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())
