"""Two ordered positive solutions for a superlinear reaction on (0, L).

Computes the minimal solution and the mountain-pass solution above it, then
lists the positive Neumann solutions found by shooting for comparison.
"""

import argparse

import numpy as np
from scipy import integrate, optimize

from quasirobin import OperatorSpec, PerturbationSpec, ProblemSpec, SolverParams
from quasirobin.mesh import c1_distance
from quasirobin.solve.core import minimal_solution
from quasirobin.solve.mountain import second_solution


def shooting_roots(f, lam, length, grid):
    def rhs(_, y):
        return [y[1], -lam * y[0] - f(y[0])]

    def hit(_, y):
        return y[0]

    hit.terminal = True

    def slope(a):
        s = integrate.solve_ivp(rhs, (0.0, length), [a, 0.0], rtol=1e-10, atol=1e-12, events=hit)
        return np.nan if s.status == 1 else s.y[1, -1]

    vals = [slope(a) for a in grid]
    return [optimize.brentq(slope, a, b) for a, b, u, v in zip(grid, grid[1:], vals, vals[1:])
            if np.isfinite(u) and np.isfinite(v) and u * v < 0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--length", type=float, default=10.0)
    ap.add_argument("--lam", type=float, default=-1.0)
    ap.add_argument("--n-cells", type=int, default=1024)
    ap.add_argument("--shoot", type=int, default=0, help="shooting grid size (0 skips shooting)")
    args = ap.parse_args()

    op = OperatorSpec.p_laplace(2.0)
    f = PerturbationSpec.superlinear_ar(1.5, 1.8, 4.0, 2.0)
    prob = ProblemSpec((0.0, args.length), 0.0, (0.0, 0.0), f, 2.0)
    params = SolverParams(n_cells=args.n_cells)
    low = minimal_solution(op, prob, args.lam, params)
    print(f"minimal:  {low.status.value}, sup {low.u.sup():.6f}, residual {low.residual:.1e}")
    if not low.ok:
        return
    high = second_solution(op, prob, args.lam, low.u, params)
    print(f"second:   {high.status.value}, sup {high.u.sup():.6f}, residual {high.residual:.1e}, "
          f"level {high.info.get('level', float('nan')):.5f}")
    if high.u is not None:
        print(f"ordering: min(u2 - u1) = {np.min(high.u.values - low.u.values):.2e}, "
              f"C1 distance {c1_distance(high.u, low.u):.3f}")
    if args.shoot:
        fx = lambda x: float(f.f(np.array([max(x, 0.0)]))[0])  # noqa: E731
        roots = shooting_roots(fx, args.lam, args.length, np.linspace(0.02, 2.6, args.shoot))
        print("shooting u(0) values:", ", ".join(f"{r:.5f}" for r in roots))


if __name__ == "__main__":
    main()
