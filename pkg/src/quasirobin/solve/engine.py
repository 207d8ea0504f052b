"""Damped Newton iterations on tridiagonal curvature models.

Both routines work on plain nodal arrays and accept any object exposing
``value``, ``grad`` and ``curvature`` (diag, off) for a 1D chain of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cholesky_banded, cho_solve_banded, solve_banded


@dataclass
class EngineResult:
    x: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    value: float
    trace: list = field(default_factory=list)
    stalled: bool = False


def _chol_solve(diag, off, rhs):
    ab = np.zeros((2, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    c = cholesky_banded(ab, lower=False)
    return cho_solve_banded((c, False), rhs)


def _tri_solve(diag, off, rhs):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs)


def newton_minimize(fun, x0, tol=1e-8, max_iters=200, metric=None, divergence=None, callback=None):
    """Minimize ``fun`` from ``x0`` until max|grad| < tol.

    Steps solve (H + tau M) d = -g with the curvature model H made positive by
    the Levenberg shift tau M (M = ``metric`` weights, default ones) and are
    safeguarded by Armijo backtracking. Near round-off level, where energy
    differences are no longer resolvable, a step is accepted when it reduces
    the gradient norm instead.
    """
    x = np.array(x0, dtype=float)
    M = np.ones_like(x) if metric is None else np.asarray(metric, dtype=float)
    f = fun.value(x)
    g = fun.grad(x)
    gn = float(np.max(np.abs(g)))
    trace = [f]
    tau = 0.0
    for it in range(1, max_iters + 1):
        if gn < tol:
            return EngineResult(x, True, it - 1, gn, f, trace)
        if divergence is not None and np.max(np.abs(x)) > divergence:
            return EngineResult(x, False, it - 1, gn, f, trace)
        diag, off = fun.curvature(x)
        scale = max(float(np.max(np.abs(diag))), 1e-300)
        accepted = False
        for _ in range(60):
            try:
                d = -_chol_solve(diag + tau * M, off, g)
            except (LinAlgError, ValueError):
                tau = max(4.0 * tau, 1e-10 * scale)
                continue
            slope = float(np.dot(g, d))
            if not np.all(np.isfinite(d)) or slope >= 0:
                tau = max(4.0 * tau, 1e-10 * scale)
                continue
            alpha = 1.0
            while alpha > 1e-12:
                xn = x + alpha * d
                fn = fun.value(xn)
                if np.isfinite(fn) and fn <= f + 1e-4 * alpha * slope:
                    accepted = True
                    break
                if np.isfinite(fn) and abs(fn - f) <= 1e-13 * max(1.0, abs(f)):
                    gnew = fun.grad(xn)
                    if float(np.max(np.abs(gnew))) < gn:
                        accepted = True
                        break
                alpha *= 0.5
            if accepted:
                break
            tau = max(4.0 * tau, 1e-6 * scale)
            if tau > 1e12 * scale:
                break
        if not accepted:
            return EngineResult(x, False, it, gn, f, trace, stalled=True)
        x, f = xn, fn
        g = fun.grad(x)
        gn = float(np.max(np.abs(g)))
        trace.append(f)
        tau = tau * 0.1 if alpha == 1.0 else tau
        if tau < 1e-14 * scale:
            tau = 0.0
        if callback is not None:
            callback(x)
    return EngineResult(x, gn < tol, max_iters, gn, f, trace)


def newton_root(fun, x0, tol=1e-8, max_iters=100):
    """Find a zero of ``fun.grad`` by Newton with the tridiagonal Jacobian,
    damped on the merit max|grad|. Used to polish saddles and fixed points."""
    x = np.array(x0, dtype=float)
    g = fun.grad(x)
    gn = float(np.max(np.abs(g)))
    for it in range(1, max_iters + 1):
        if gn < tol:
            return EngineResult(x, True, it - 1, gn, fun.value(x))
        diag, off = fun.curvature(x)
        try:
            d = -_tri_solve(diag, off, g)
        except (LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(d)):
            break
        alpha = 1.0
        ok = False
        while alpha > 1e-6:
            xn = x + alpha * d
            gnew = fun.grad(xn)
            gnn = float(np.max(np.abs(gnew)))
            if np.isfinite(gnn) and gnn < (1 - 1e-4 * alpha) * gn:
                ok = True
                break
            alpha *= 0.5
        if not ok:
            break
        x, g, gn = xn, gnew, gnn
    return EngineResult(x, gn < tol, it, gn, fun.value(x), stalled=gn >= tol)
