import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasirobin.continuation import (ContinuityReport, LambdaStar, check_left_continuity, detect_lambda_star,
                                     picone_defect, sweep)
from quasirobin.eigen import principal_eigenpair
from quasirobin.errors import BracketError, ConfigError, NotPLaplace, NotPositive
from quasirobin.mesh import Mesh
from quasirobin.operator import OperatorSpec
from quasirobin.problem import PerturbationSpec, ProblemSpec
from quasirobin.solve.params import SolverParams, Status

LAP = OperatorSpec.p_laplace(2.0)
SUBLIN = PerturbationSpec.sublinear_example(1.2, 1.6, 1.8, 1.3)
SQRT_CAP = PerturbationSpec.power_sum([(1.0, 1.5)], cap=1.0)
CUBIC = PerturbationSpec.power_sum([(2.0, 2.0), (-1.0, 4.0)])
PARAMS = SolverParams(n_cells=128)


@pytest.fixture(scope="module")
def robin():
    prob = ProblemSpec((0.0, 1.0), 0.0, (1.0, 1.0), SUBLIN, 2.0)
    eig = principal_eigenpair(2.0, prob, n_cells=PARAMS.n_cells)
    return prob, eig


def test_sweep_branch_increases(robin):
    prob, eig = robin
    grid = np.linspace(eig.lambda1 - 2.0, eig.lambda1 + 0.5, 6)
    br = sweep(LAP, prob, grid, PARAMS, threads=1)
    assert all(o.ok for o in br.outcomes)
    assert br.violations == []
    assert all(inc > 0 for _, _, inc in br.increments())
    assert br.eigen_ref.lambda1 == pytest.approx(eig.lambda1)


def test_sweep_rows_layout(robin):
    prob, eig = robin
    br = sweep(LAP, prob, [eig.lambda1 - 1.0, eig.lambda1 - 0.5], PARAMS, threads=1, eigen=False)
    rows = br.rows()
    assert [r["u_min_at_nodes_file"] for r in rows] == ["profile_000.csv", "profile_001.csv"]
    assert set(rows[0]) == {"lambda", "status", "u_min_at_nodes_file", "uinf_norm", "energy", "residual",
                            "second_solution_status"}
    assert rows[0]["second_solution_status"] == ""
    assert br.eigen_ref is None


def test_sweep_parallel_matches_serial(robin):
    prob, eig = robin
    grid = np.linspace(eig.lambda1 - 1.5, eig.lambda1 - 0.5, 3)
    a = sweep(LAP, prob, grid, PARAMS, threads=1, eigen=False)
    b = sweep(LAP, prob, grid, PARAMS, threads=3, eigen=False)
    for x, y in zip(a.outcomes, b.outcomes):
        assert np.array_equal(x.u.values, y.u.values)


def test_sweep_rejects_bad_grids(robin):
    prob, _ = robin
    with pytest.raises(ConfigError):
        sweep(LAP, prob, [0.1, 0.0], PARAMS)
    with pytest.raises(ConfigError):
        sweep(LAP, prob, [], PARAMS)
    with pytest.raises(ConfigError):
        sweep(LAP, prob, [0.0], PARAMS, threads=0)


def test_sweep_flags_half_line_violation(robin, monkeypatch):
    import quasirobin.continuation as cont

    prob, eig = robin
    real = cont.minimal_solution

    def fake(op, pr, lam, params, **kw):
        out = real(op, pr, lam, params, **kw)
        if lam < eig.lambda1 - 1.2:
            out.status = Status.NO_SOLUTION_DETECTED
        return out

    monkeypatch.setattr(cont, "minimal_solution", fake)
    br = sweep(LAP, prob, [eig.lambda1 - 1.5, eig.lambda1 - 1.0], PARAMS, threads=1, eigen=False)
    assert [v["kind"] for v in br.violations] == ["half_line"]


def test_lambda_star_for_positive_sublinear_f():
    prob = ProblemSpec((0.0, 1.0), 0.0, (0.0, 0.0), SQRT_CAP, 2.0)
    ls = detect_lambda_star(LAP, prob, (-1.0, 1.0), 1e-2, SolverParams(n_cells=64))
    assert ls.width <= 1e-2
    assert ls.contains(0.0)
    assert ls.as_dict() == {"lo": ls.lo, "hi": ls.hi, "evaluations": ls.evaluations}


def test_lambda_star_expands_bracket():
    prob = ProblemSpec((0.0, 1.0), 0.0, (0.0, 0.0), SQRT_CAP, 2.0)
    ls = detect_lambda_star(LAP, prob, (0.5, 1.0), 5e-2, SolverParams(n_cells=64))
    assert ls.contains(0.0)
    assert ls.history[0][0] == 0.5


def test_lambda_star_without_bracket_raises():
    prob = ProblemSpec((0.0, 1.0), 0.0, (0.0, 0.0), CUBIC, 2.0)
    # solvable for every lam > -2 on the constant branch sqrt(lam + 2)
    with pytest.raises(BracketError):
        detect_lambda_star(LAP, prob, (0.0, 1.0), 1e-2, SolverParams(n_cells=32), max_expansions=2)


def test_lambda_star_argument_checks(robin):
    prob, _ = robin
    with pytest.raises(ConfigError):
        detect_lambda_star(LAP, prob, (1.0, 0.0))
    with pytest.raises(ConfigError):
        detect_lambda_star(LAP, prob, (0.0, 1.0), tol_lambda=0.0)


def test_left_continuity_distances_shrink(robin):
    prob, eig = robin
    rep = check_left_continuity(LAP, prob, eig.lambda1 - 0.5, [0.1, 0.01, 0.001], PARAMS)
    assert rep.nonincreasing
    assert rep.distances[-1] < 1e-3


def test_left_continuity_constant_family_oracle():
    prob = ProblemSpec((0.0, 1.0), 0.0, (0.0, 0.0), CUBIC, 2.0)
    deltas = [0.1, 0.01, 0.001]
    rep = check_left_continuity(LAP, prob, -1.0, deltas, PARAMS)
    expected = [abs(np.sqrt(-1.0 - d + 2.0) - 1.0) for d in deltas]
    assert np.allclose(rep.distances, expected, atol=1e-6)
    assert rep.nonincreasing


def test_left_continuity_zero_delta_and_validation(robin):
    prob, eig = robin
    rep = check_left_continuity(LAP, prob, eig.lambda1 - 0.5, [0.0], PARAMS)
    assert rep.distances == [0.0]
    with pytest.raises(ConfigError):
        check_left_continuity(LAP, prob, 0.0, [0.01, 0.1], PARAMS)
    with pytest.raises(ConfigError):
        check_left_continuity(LAP, prob, 0.0, [-0.1], PARAMS)


def test_continuity_report_pass_rule():
    assert ContinuityReport(0.0, [0.1, 0.01], [1e-2, 1e-5]).passed
    assert not ContinuityReport(0.0, [0.1, 0.01], [1e-2, 2e-2]).passed
    assert not ContinuityReport(0.0, [], []).passed


def test_lambda_star_interval_helpers():
    ls = LambdaStar(-0.01, 0.01, 5)
    assert ls.width == pytest.approx(0.02)
    assert ls.contains(0.0) and not ls.contains(0.5)


# -- Picone -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def picone_setup():
    prob = ProblemSpec((0.0, 1.0), lambda z: 1.0 + np.sin(3 * z), (0.5, 1.0), SQRT_CAP, 2.0)
    eig = principal_eigenpair(2.0, prob, n_cells=64)
    return prob, eig


def test_picone_vanishes_on_the_eigenfunction(picone_setup):
    prob, eig = picone_setup
    assert abs(picone_defect(eig, eig.u1, prob, LAP)) < 1e-9
    assert abs(picone_defect(eig, eig.u1 * 3.0, prob, LAP)) < 1e-9


@settings(max_examples=20)
@given(st.integers(0, 2**31 - 1))
def test_picone_nonnegative_on_positive_functions(picone_setup, seed):
    prob, eig = picone_setup
    rng = np.random.default_rng(seed)
    mesh = eig.u1.mesh
    u = mesh.function(np.exp(rng.normal(0.0, 1.0, mesh.n_nodes)))
    assert picone_defect(eig, u, prob, LAP) >= -1e-8


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_picone_nonnegative_other_exponents(p):
    prob = ProblemSpec((0.0, 1.0), 0.0, (1.0, 1.0), PerturbationSpec.power_sum([(1.0, 1.2)], cap=1.0), p)
    eig = principal_eigenpair(p, prob, n_cells=64)
    rng = np.random.default_rng(1)
    for _ in range(5):
        u = eig.u1.mesh.function(rng.uniform(0.1, 2.0, 65))
        assert picone_defect(eig, u, prob, OperatorSpec.p_laplace(p)) >= -1e-8


def test_picone_gates(picone_setup):
    prob, eig = picone_setup
    mesh = eig.u1.mesh
    with pytest.raises(NotPositive):
        picone_defect(eig, mesh.function(np.linspace(-1.0, 1.0, mesh.n_nodes)), prob, LAP)
    with pytest.raises(NotPLaplace):
        picone_defect(eig, eig.u1, prob, OperatorSpec.p_laplace(3.0))
    with pytest.raises(NotPLaplace):
        picone_defect(eig, eig.u1, prob, OperatorSpec.pq_laplace(2.0, 1.5))
    with pytest.raises(ConfigError):
        picone_defect(eig, Mesh.on((0.0, 1.0), 32).constant(1.0), prob, LAP)
