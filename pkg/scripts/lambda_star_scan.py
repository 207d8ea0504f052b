"""Critical parameter as a function of the Robin weight.

For f = min(sqrt(x), 1) the critical parameter coincides with the principal
eigenvalue; the scan compares the bisection interval with the eigenvalue for
a range of symmetric Robin weights (gap is the distance from the eigenvalue
to the interval).
"""

import argparse

from quasirobin import OperatorSpec, PerturbationSpec, ProblemSpec, SolverParams, principal_eigenpair
from quasirobin.continuation import detect_lambda_star


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-cells", type=int, default=128)
    ap.add_argument("--tol", type=float, default=1e-2)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0, 5.0])
    args = ap.parse_args()

    op = OperatorSpec.p_laplace(2.0)
    f = PerturbationSpec.power_sum([(1.0, 1.5)], cap=1.0)
    params = SolverParams(n_cells=args.n_cells)
    print(f"{'beta':>6} {'lambda1':>10} {'lo':>10} {'hi':>10} {'gap':>9} {'solves':>7}")
    for b in args.betas:
        prob = ProblemSpec((0.0, 1.0), 0.0, (b, b), f, 2.0)
        lam1 = principal_eigenpair(2.0, prob, n_cells=args.n_cells).lambda1
        ls = detect_lambda_star(op, prob, (lam1 - 1.0, lam1 + 1.0), args.tol, params)
        print(f"{b:6.2f} {lam1:10.5f} {ls.lo:10.5f} {ls.hi:10.5f} {max(ls.lo - lam1, lam1 - ls.hi, 0.0):9.1e} {ls.evaluations:7d}")


if __name__ == "__main__":
    main()
