"""Independent reference computations used by the tests.

None of these call into the package's solvers: they use closed forms,
scipy root finders, an ODE integrator or a separately assembled matrix.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, optimize
from scipy.linalg import eigh_tridiagonal


def robin_laplace_lambda1(b: float, length: float = 1.0) -> float:
    """Smallest eigenvalue of -u'' = lam u on (0, L) with u'(0) = b u(0),
    -u'(L) = b u(L), b > 0: lam = (w/L)^2 where tan w = 2 b L w / (w^2 - (bL)^2)."""
    c = b * length

    def g(w):
        return (w * w - c * c) * np.sin(w) - 2.0 * c * w * np.cos(w)

    w = optimize.brentq(g, 1e-9, np.pi - 1e-12, xtol=1e-15, rtol=1e-15)
    return (w / length) ** 2


def lumped_fem_lambda1(n_cells: int, xi, beta, length: float = 1.0) -> float:
    """Lowest eigenvalue of (K + M xi + B) v = lam M v with lumped M, via a
    symmetric tridiagonal eigensolver."""
    h = length / n_cells
    n = n_cells + 1
    m = np.full(n, h)
    m[0] = m[-1] = h / 2
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (n,))
    d = np.full(n, 2.0 / h)
    d[0] = d[-1] = 1.0 / h
    d = d + m * xi
    d[0] += beta[0]
    d[-1] += beta[1]
    e = np.full(n - 1, -1.0 / h)
    s = 1.0 / np.sqrt(m)
    w = eigh_tridiagonal(d * s * s, e * s[:-1] * s[1:], eigvals_only=True, select="i", select_range=(0, 0))
    return float(w[0])


def robin_shooting(f, lam: float, length: float, a_grid, beta=(0.0, 0.0)):
    """Initial values a > 0 for which -u'' = lam u + f(u) with u(0) = a,
    u'(0) = beta0 a also meets u'(L) + beta1 u(L) = 0 while staying positive.
    Returns the sorted roots found by bracketing the end defect on ``a_grid``."""
    b0, b1 = beta

    def rhs(_, y):
        return [y[1], -lam * y[0] - f(y[0])]

    def hit_zero(_, y):
        return y[0]

    hit_zero.terminal = True

    def defect(a):
        sol = integrate.solve_ivp(rhs, (0.0, length), [a, b0 * a], rtol=1e-11, atol=1e-13, events=hit_zero)
        if sol.status == 1:
            return np.nan
        return sol.y[1, -1] + b1 * sol.y[0, -1]

    vals = [defect(a) for a in a_grid]
    roots = []
    for a0, a1, v0, v1 in zip(a_grid, a_grid[1:], vals, vals[1:]):
        if np.isfinite(v0) and np.isfinite(v1) and v0 * v1 < 0:
            roots.append(optimize.brentq(defect, a0, a1, xtol=1e-13))
        elif v0 == 0:
            roots.append(float(a0))
    return sorted(roots)


def neumann_shooting(f, lam: float, length: float, a_grid):
    return robin_shooting(f, lam, length, a_grid)


def central_difference_gradient(fn, x, step=1e-6):
    """Central differences with a step relative to each coordinate."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        hi = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += hi
        xm[i] -= hi
        g[i] = (fn(xp) - fn(xm)) / (2 * hi)
    return g


def primitive_by_quad(f, x):
    return integrate.quad(f, 0.0, x, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
