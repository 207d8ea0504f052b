import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import central_difference_gradient
from quasirobin.energy import (DiazSaaProbe, Family, FunctionalSpec, assemble_mu, build, diaz_saa_convexity, energy,
                               gradient, rayleigh)
from quasirobin.errors import BarrierMissing, ConfigError, MeshMismatch, NotPositive, ZeroFunction
from quasirobin.mesh import Mesh
from quasirobin.operator import OperatorSpec
from quasirobin.problem import PerturbationSpec, ProblemSpec

UNIT = Mesh(0.0, 1.0, 16)
ZERO_F = PerturbationSpec.custom(lambda z, x: 0.0 * x, primitive=lambda z, x: 0.0 * x, derivative=lambda z, x: 0.0 * x)


def problem(p, xi=0.0, beta=(0.0, 0.0), pert=None, interval=(0.0, 1.0)):
    pert = pert or PerturbationSpec.power_sum([(1.0, 1.5), (1.0, p + 1.5)])
    return ProblemSpec(interval, xi, beta, pert, p)


def specs(p, mesh, rng):
    barrier = mesh.function(rng.uniform(0.5, 1.5, mesh.n_nodes))
    return [
        FunctionalSpec(Family.MU),
        FunctionalSpec(Family.PHI_LAMBDA, lam=0.3, eta=2.0),
        FunctionalSpec(Family.TRUNC_CAP, lam=0.3, eta=2.0, barrier=barrier),
        FunctionalSpec(Family.TRUNC_FLOOR, lam=-0.4, eta=2.0, barrier=barrier),
        FunctionalSpec(Family.AUX_PSI, aux_coeffs=(2.0, 1.0, min(1.3, p), p + 1.0)),
        FunctionalSpec(Family.SUPER_PSI, lam=0.3, eta=2.0),
        FunctionalSpec(Family.ROBIN_W, lam=-0.2, eta=2.0),
    ]


def test_mu_examples():
    op = OperatorSpec.p_laplace(2)
    one = Mesh(0.0, 1.0, 32).constant(1.0)
    assert assemble_mu(op, problem(2, xi=1.0), one) == pytest.approx(1.0)
    assert assemble_mu(op, problem(2, xi=1.0, beta=(1, 1)), one) == pytest.approx(3.0)
    z = Mesh(0.0, 1.0, 32).sample(lambda x: x)
    assert assemble_mu(op, problem(2), z) == pytest.approx(1.0)
    assert energy(FunctionalSpec(Family.MU), op, problem(2), z) == assemble_mu(op, problem(2), z)


def test_family_examples():
    op = OperatorSpec.p_laplace(2)
    one = Mesh(0.0, 1.0, 32).constant(1.0)
    phi = FunctionalSpec(Family.PHI_LAMBDA, lam=0.0, eta=1.0)
    assert energy(phi, op, problem(2, pert=ZERO_F), one) == pytest.approx(0.0, abs=1e-14)
    aux = FunctionalSpec(Family.AUX_PSI, aux_coeffs=(2.0, 1.0, 2.0, 4.0))
    assert energy(aux, op, problem(2, xi=1.0), one) == pytest.approx(-0.25)
    g = gradient(FunctionalSpec(Family.MU), op, problem(2), one)
    assert np.all(g.values == 0.0)


def test_rayleigh_examples():
    one = Mesh(0.0, 1.0, 32).constant(1.0)
    assert rayleigh(2, problem(2), one) == pytest.approx(0.0)
    assert rayleigh(2, problem(2, xi=3.0), one) == pytest.approx(3.0)
    assert rayleigh(2, problem(2, beta=(1, 1)), one) == pytest.approx(2.0)
    with pytest.raises(ZeroFunction):
        rayleigh(2, problem(2), one * 0.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_gradient_matches_finite_differences(p, rng):
    op = OperatorSpec.p_laplace(p)
    prob = problem(p, xi=UNIT.sample(lambda z: np.cos(2 * np.pi * z)).values.tolist(), beta=(0.7, 1.3))
    tol = 1e-6 if p >= 2 else 1e-4
    for spec in specs(p, UNIT, rng):
        fun = build(spec, op, prob, UNIT)
        for _ in range(20):
            u = rng.uniform(-0.5, 2.0, UNIT.n_nodes)
            slopes = np.abs(np.diff(u)) / UNIT.h
            if p < 2 and np.min(slopes) < 1e-8:
                continue
            fd = central_difference_gradient(fun.value, u)
            g = fun.grad(u)
            err = np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-12)
            assert err < tol, (spec.family, err)


@pytest.mark.parametrize("op", [OperatorSpec.pq_laplace(3.0, 2.0), OperatorSpec.mean_curvature(2.0),
                                OperatorSpec.perturbed(2.5)])
def test_gradient_other_operators(op, rng):
    prob = problem(op.p, beta=(1.0, 0.0))
    fun = build(FunctionalSpec(Family.PHI_LAMBDA, lam=0.1, eta=1.0), op, prob, UNIT)
    for _ in range(5):
        u = rng.uniform(0.1, 2.0, UNIT.n_nodes)
        fd = central_difference_gradient(fun.value, u)
        assert np.max(np.abs(fun.grad(u) - fd)) / np.max(np.abs(fd)) < 1e-6


def test_curvature_is_second_derivative(rng):
    op = OperatorSpec.p_laplace(3.0)
    prob = problem(3.0, beta=(1.0, 2.0))
    fun = build(FunctionalSpec(Family.PHI_LAMBDA, lam=0.1, eta=1.0), op, prob, UNIT)
    u = rng.uniform(0.2, 2.0, UNIT.n_nodes)
    diag, off = fun.curvature(u)
    e = np.zeros(UNIT.n_nodes)
    e[5] = 1.0
    h = 1e-6
    col = (fun.grad(u + h * e) - fun.grad(u - h * e)) / (2 * h)
    assert col[5] == pytest.approx(diag[5], rel=1e-5)
    assert col[4] == pytest.approx(off[4], rel=1e-5)
    assert col[6] == pytest.approx(off[5], rel=1e-5)


@given(st.floats(-20, 20).filter(lambda t: abs(t) > 1e-3), st.floats(1.2, 4.0))
def test_rayleigh_is_homogeneous(t, r):
    mesh = Mesh(0.0, 1.0, 16)
    prob = problem(2.0, xi=-0.5, beta=(0.3, 1.0))
    u = mesh.sample(lambda z: 1.0 + z * (1 - z) + 0.3 * np.sin(5 * z))
    assert rayleigh(r, prob, u * t) == pytest.approx(rayleigh(r, prob, u), rel=1e-10)


def test_cap_truncation_agrees_below_barrier(rng):
    op = OperatorSpec.p_laplace(2.0)
    prob = problem(2.0)
    barrier = UNIT.constant(3.0)
    u = UNIT.function(rng.uniform(0.1, 2.9, UNIT.n_nodes))
    cap = FunctionalSpec(Family.TRUNC_CAP, lam=0.2, eta=1.5, barrier=barrier)
    plain = FunctionalSpec(Family.PHI_LAMBDA, lam=0.2, eta=1.5)
    assert energy(cap, op, prob, u) == pytest.approx(energy(plain, op, prob, u), rel=1e-13)


def test_floor_truncation_above_barrier_differs_by_constant(rng):
    op = OperatorSpec.p_laplace(2.0)
    prob = problem(2.0)
    barrier = UNIT.constant(0.5)
    floor = FunctionalSpec(Family.TRUNC_FLOOR, lam=0.2, eta=1.5, barrier=barrier)
    plain = FunctionalSpec(Family.PHI_LAMBDA, lam=0.2, eta=1.5)
    diffs = []
    for _ in range(3):
        u = UNIT.function(rng.uniform(0.6, 3.0, UNIT.n_nodes))
        diffs.append(energy(floor, op, prob, u) - energy(plain, op, prob, u))
    assert np.ptp(diffs) < 1e-12


def test_coercivity_along_rays(rng):
    op = OperatorSpec.p_laplace(2.0)
    prob = problem(2.0, xi=0.5, pert=PerturbationSpec.power_sum([(1.0, 1.5)], cap=1.0))
    eta = 2.0
    lam = 1.0  # lam + eps < eta - ||xi||_inf
    spec = FunctionalSpec(Family.PHI_LAMBDA, lam=lam, eta=eta)
    for _ in range(5):
        u = UNIT.function(rng.uniform(-1.0, 1.0, UNIT.n_nodes))
        vals = [energy(spec, op, prob, u * t) for t in (10.0, 1e2, 1e3)]
        assert vals[0] < vals[1] < vals[2]
        assert vals[2] > 1e3 * max(abs(vals[0]), 1.0)


def test_spec_validation():
    with pytest.raises(BarrierMissing):
        FunctionalSpec(Family.TRUNC_CAP)
    with pytest.raises(ConfigError):
        FunctionalSpec(Family.AUX_PSI)
    with pytest.raises(ConfigError):
        FunctionalSpec(Family.AUX_PSI, aux_coeffs=(1.0, 1.0, 3.0, 2.0))
    op = OperatorSpec.p_laplace(2.0)
    with pytest.raises(MeshMismatch):
        energy(FunctionalSpec(Family.MU), op, problem(2.0, interval=(0.0, 2.0)), UNIT.constant(1.0))
    with pytest.raises(MeshMismatch):
        spec = FunctionalSpec(Family.TRUNC_CAP, barrier=Mesh(0.0, 1.0, 8).constant(1.0))
        energy(spec, op, problem(2.0), UNIT.constant(1.0))
    with pytest.raises(ConfigError):
        energy(FunctionalSpec(Family.MU), OperatorSpec.p_laplace(3.0), problem(2.0), UNIT.constant(1.0))


def test_diaz_saa_examples():
    op = OperatorSpec.p_laplace(2.0)
    prob = problem(2.0, xi=1.0, beta=(1, 1))
    m = Mesh(0.0, 1.0, 32)
    u = m.sample(lambda z: 1 + z)
    assert diaz_saa_convexity(DiazSaaProbe(u, u), op, prob).violation == 0.0
    rep = diaz_saa_convexity(DiazSaaProbe(m.constant(1.0), m.constant(2.0), q=2.0), op, prob)
    assert rep.violation <= 1e-10
    with pytest.raises(NotPositive):
        diaz_saa_convexity(DiazSaaProbe(u, m.constant(0.0)), op, prob)
    with pytest.raises(ConfigError):
        DiazSaaProbe(u, u, m=2)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_diaz_saa_random_pairs(p, rng):
    op = OperatorSpec.p_laplace(p)
    prob = problem(p, xi=rng.uniform(-1, 1, 33).tolist(), beta=(0.5, 0.0))
    m = Mesh(0.0, 1.0, 32)
    for _ in range(20):
        u1 = m.function(rng.uniform(0.05, 3.0, m.n_nodes))
        u2 = m.function(rng.uniform(0.05, 3.0, m.n_nodes))
        assert diaz_saa_convexity(DiazSaaProbe(u1, u2), op, prob).violation <= 1e-8
