import numpy as np
import pytest
from scipy import optimize

from oracles import neumann_shooting
from quasirobin.energy import Family, FunctionalSpec
from quasirobin.errors import ConfigError, PathCollapse, PreconditionError
from quasirobin.mesh import Cone, c1_distance, cone_check
from quasirobin.operator import OperatorSpec
from quasirobin.problem import PerturbationSpec, ProblemSpec
from quasirobin.solve.core import minimal_solution, residual
from quasirobin.solve.mountain import mountain_pass, path_mountain_pass, second_solution
from quasirobin.solve.params import MountainPassParams, SolverParams, Status

LAP = OperatorSpec.p_laplace(2.0)
F1 = PerturbationSpec.superlinear_ar(1.5, 1.8, 4.0, 2.0)
LAMBDA = -1.0


def _root_polish(grad):
    def polish(x):
        sol = optimize.root(grad, x, tol=1e-14)
        return sol.x, bool(sol.success)
    return polish


@pytest.mark.parametrize("dim", [1, 2, 5])
def test_double_well_saddle(dim):
    def value(x):
        return (x[0] ** 2 - 1) ** 2 + float(np.dot(x[1:], x[1:]))

    def grad(x):
        return np.concatenate([[4 * x[0] * (x[0] ** 2 - 1)], 2 * x[1:]])

    lo = np.zeros(dim)
    lo[0] = -1.0
    res = path_mountain_pass(value, grad, lo, -lo, MountainPassParams(), polish=_root_polish(grad),
                             rng=np.random.default_rng(0))
    assert res.converged
    assert np.max(np.abs(res.x)) < 1e-6
    assert res.level == pytest.approx(1.0, abs=1e-10)


def test_string_collapses_without_barrier():
    # on a tilted plane every interior point lies below the start: no pass to find
    def value(x):
        return -float(x[0])

    def grad(x):
        return np.array([-1.0, 0.0])

    with pytest.raises(PathCollapse):
        path_mountain_pass(value, grad, np.array([0.0, 0.0]), np.array([1.0, 0.0]),
                           MountainPassParams(path_points=5))


@pytest.fixture(scope="module")
def f1_case():
    prob = ProblemSpec((0.0, 10.0), 0.0, (0.0, 0.0), F1, 2.0)
    params = SolverParams(n_cells=256)
    low = minimal_solution(LAP, prob, LAMBDA, params)
    assert low.ok
    high = second_solution(LAP, prob, LAMBDA, low.u, params)
    return prob, params, low, high


def test_second_solution_is_distinct_and_above(f1_case):
    prob, params, low, high = f1_case
    assert high.ok
    assert high.residual < 1e-6
    assert np.min(high.u.values - low.u.values) >= -1e-9
    assert c1_distance(high.u, low.u) > 1e-3
    assert cone_check(high.u) is Cone.IN_D_PLUS
    assert residual(LAP, prob, LAMBDA, high.u) == pytest.approx(high.residual)


def test_min_max_level_above_low_energy(f1_case):
    _, _, _, high = f1_case
    assert high.info["gap"] > 0
    assert high.info["level"] > high.info["low_level"]


def test_minimal_solution_is_the_small_constant(f1_case):
    prob, _, low, _ = f1_case
    # constant states solve x = f(x) since lam = -1 and xi = 0
    x = np.linspace(1e-3, 0.5, 20001)
    g = F1.f(x) - x
    k = int(np.argmax(np.sign(g[:-1]) != np.sign(g[1:])))
    ubar = optimize.brentq(lambda s: float(F1.f(np.array([s]))[0]) - s, x[k], x[k + 1])
    assert np.max(np.abs(low.u.values - ubar)) < 1e-7


def test_shooting_confirms_several_positive_solutions(f1_case):
    def fx(x):
        return float(F1.f(np.array([max(x, 0.0)]))[0])

    roots = neumann_shooting(fx, LAMBDA, 10.0, np.linspace(0.5, 2.0, 15))
    assert len(roots) >= 2


def test_second_peak_matches_homoclinic_energy_identity():
    # on a long interval the mountain-pass profile is close to the half bump
    # whose peak a solves F(a) - F(ubar) = (a^2 - ubar^2) / 2
    prob = ProblemSpec((0.0, 10.0), 0.0, (0.0, 0.0), F1, 2.0)
    params = SolverParams(n_cells=1024)
    low = minimal_solution(LAP, prob, LAMBDA, params)
    high = second_solution(LAP, prob, LAMBDA, low.u, params)
    assert high.ok
    ubar = float(low.u.values[0])

    def identity(a):
        return float(F1.F(np.array([a]))[0] - F1.F(np.array([ubar]))[0]) - 0.5 * (a * a - ubar * ubar)

    peak = optimize.brentq(identity, 2.0, 3.0)
    assert high.u.sup() == pytest.approx(peak, abs=1e-3)


def test_second_solution_class_gate():
    prob = ProblemSpec((0.0, 1.0), 0.0, (1.0, 1.0), PerturbationSpec.sublinear_example(1.2, 1.6, 1.8, 1.3), 2.0)
    low = minimal_solution(LAP, prob, 0.5, SolverParams(n_cells=64))
    with pytest.raises(PreconditionError):
        second_solution(LAP, prob, 0.5, low.u)


def test_mountain_pass_family_gate(f1_case):
    prob, params, low, _ = f1_case
    with pytest.raises(ConfigError):
        mountain_pass(FunctionalSpec(Family.PHI_LAMBDA, lam=LAMBDA, eta=1.0), LAP, prob, low.u, params)


def test_mountain_pass_is_deterministic(f1_case):
    prob, params, low, high = f1_case
    again = second_solution(LAP, prob, LAMBDA, low.u, params)
    assert again.status is Status.SOLUTION
    assert np.array_equal(again.u.values, high.u.values)


@pytest.mark.parametrize("seed", range(6))
def test_second_solution_across_seeds(seed):
    prob = ProblemSpec((0.0, 10.0), 0.0, (0.0, 0.0), F1, 2.0)
    params = SolverParams(n_cells=256, seed=seed)
    low = minimal_solution(LAP, prob, LAMBDA, params)
    high = second_solution(LAP, prob, LAMBDA, low.u, params)
    assert high.ok, high.info.get("reason")
    assert high.info["attempts"] <= MountainPassParams().restarts
    assert np.min(high.u.values - low.u.values) >= -1e-9


def test_restart_params_validated():
    with pytest.raises(ConfigError):
        MountainPassParams(restarts=0)
    with pytest.raises(ConfigError):
        MountainPassParams(polish_failures=0)
