"""Discrete energy functionals on the P1 mesh with exact nodal gradients.

Every functional has the shape

    J(u) = g_w * h * sum_cells G0(|Du|) + sum_i w_i Z_i(u_i) + b_w * sum_ends beta |u|^pb

with trapezoid weights w_i, so the zero-order part is diagonal in the nodal
basis and the gradient is exact for the discrete energy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import BarrierMissing, ConfigError, MeshMismatch, NotPositive, ZeroFunction
from .mesh import DiscreteFunction, Mesh, lp_power
from .operator import OperatorSpec, eval_a, flux_derivative
from .problem import ProblemSpec, TruncatedReaction, TruncationMode

_CURV_EPS = 1e-8


class Family(str, enum.Enum):
    MU = "mu"
    PHI_LAMBDA = "phi_lambda"
    TRUNC_CAP = "trunc_cap"
    TRUNC_FLOOR = "trunc_floor"
    AUX_PSI = "aux_psi"
    SUPER_PSI = "super_psi"
    ROBIN_W = "robin_w"


@dataclass(frozen=True)
class FunctionalSpec:
    family: Family
    lam: float = 0.0
    eta: float = 1.0
    barrier: DiscreteFunction | None = None
    aux_coeffs: tuple | None = None  # (c9, c10, q, r)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam in (Family.TRUNC_CAP, Family.TRUNC_FLOOR) and self.barrier is None:
            raise BarrierMissing(f"{fam.value} needs a barrier")
        if fam is Family.AUX_PSI:
            if self.aux_coeffs is None or len(self.aux_coeffs) != 4:
                raise ConfigError("aux_psi needs aux_coeffs = (c9, c10, q, r)")
        if self.aux_coeffs is not None:
            c9, c10, q, r = self.aux_coeffs
            if not (c9 > 0 and c10 > 0 and 1 < q < r):
                raise ConfigError("aux coefficients need c9, c10 > 0 and 1 < q < r")


# -- zero-order terms ----------------------------------------------------------


class _AbsPow:
    """c |x|^e / e."""

    def __init__(self, c, e):
        self.c, self.e = c, e

    def value(self, x):
        return self.c * np.abs(x) ** self.e / self.e

    def d1(self, x):
        return self.c * np.abs(x) ** (self.e - 1) * np.sign(x)

    def d2(self, x):
        return self.c * (self.e - 1) * np.maximum(np.abs(x), _CURV_EPS) ** (self.e - 2)


class _PosPow(_AbsPow):
    """c (x+)^e / e."""

    def value(self, x):
        return super().value(np.maximum(x, 0.0))

    def d1(self, x):
        return super().d1(np.maximum(x, 0.0))

    def d2(self, x):
        return np.where(x > 0, super().d2(x), 0.0)


class _NegPow(_AbsPow):
    """c (x-)^e / e."""

    def value(self, x):
        return super().value(np.minimum(x, 0.0))

    def d1(self, x):
        return super().d1(np.minimum(x, 0.0))

    def d2(self, x):
        return np.where(x < 0, super().d2(x), 0.0)


class _Linear:
    def __init__(self, c):
        self.c = c

    def value(self, x):
        return self.c * x

    def d1(self, x):
        return self.c * np.ones_like(x)

    def d2(self, x):
        return np.zeros_like(x)


class _Reaction:
    """Minus the primitive of a (truncated) reaction."""

    def __init__(self, tr: TruncatedReaction, prob: ProblemSpec, z, b):
        self.tr, self.prob, self.z, self.b = tr, prob, z, b

    def value(self, x):
        return -self.tr.primitive(self.prob, self.z, x, self.b)

    def d1(self, x):
        return -self.tr.value(self.prob, self.z, x, self.b)

    def d2(self, x):
        return -self.tr.derivative(self.prob, self.z, x, self.b)


class _MinusF:
    """-F(z, x+) - (lam/p)(x+)^p, the reaction part of the superlinear energies."""

    def __init__(self, prob, z, lam):
        self.prob, self.z, self.lam = prob, z, lam
        self.pert = prob.perturbation

    def value(self, x):
        xp = np.maximum(x, 0.0)
        return -self.pert.F(xp, self.z) - self.lam * xp**self.prob.p / self.prob.p

    def d1(self, x):
        xp = np.maximum(x, 0.0)
        return -self.pert.f(xp, self.z) - self.lam * xp ** (self.prob.p - 1)

    def d2(self, x):
        p = self.prob.p
        xe = np.maximum(x, _CURV_EPS)
        return np.where(x > 0, -self.pert.df(xe, self.z) - self.lam * (p - 1) * xe ** (p - 2), 0.0)


class NodalFunctional:
    """Assembled discrete functional acting on nodal arrays."""

    def __init__(self, op: OperatorSpec, mesh: Mesh, g_weight, terms, beta, b_weight, b_exp):
        self.op = op
        self.mesh = mesh
        self.g_weight = float(g_weight)
        self.terms = list(terms)
        self.beta = (float(beta[0]), float(beta[1]))
        self.b_weight = float(b_weight)
        self.b_exp = float(b_exp)
        self.w = np.asarray(mesh.weights)
        self.h = mesh.h

    def _zero_order(self, u, which):
        out = np.zeros_like(u)
        for t in self.terms:
            out = out + getattr(t, which)(u)
        return out

    def value(self, u):
        u = np.asarray(u, dtype=float)
        du = np.diff(u) / self.h
        val = self.g_weight * self.h * float(np.sum(self.op.G0(np.abs(du))))
        val += float(np.dot(self.w, self._zero_order(u, "value")))
        bl, br = self.beta
        e = self.b_exp
        val += self.b_weight * (bl * abs(u[0]) ** e + br * abs(u[-1]) ** e)
        return val

    def grad(self, u):
        u = np.asarray(u, dtype=float)
        flux = self.g_weight * eval_a(self.op, np.diff(u) / self.h)
        g = np.zeros_like(u)
        g[:-1] -= flux
        g[1:] += flux
        g += self.w * self._zero_order(u, "d1")
        bl, br = self.beta
        e = self.b_exp
        g[0] += self.b_weight * bl * e * abs(u[0]) ** (e - 1) * np.sign(u[0])
        g[-1] += self.b_weight * br * e * abs(u[-1]) ** (e - 1) * np.sign(u[-1])
        return g

    def curvature(self, u):
        """Tridiagonal second-derivative model (diag, off).

        Exact where the energy is twice differentiable and p >= 2; the flux
        derivative is clamped at small slopes and powers at small |u|.
        """
        u = np.asarray(u, dtype=float)
        t = np.maximum(np.abs(np.diff(u) / self.h), _CURV_EPS)
        k = flux_derivative(self.op, t)
        if self.op.p < 2:
            # near zero slopes the exact curvature makes Newton flip the sign of
            # the slope; blending in the secant modulus a0 >= a' damps that
            k = 0.5 * (k + self.op.a0(t))
        k = self.g_weight * k / self.h
        diag = np.zeros_like(u)
        diag[:-1] += k
        diag[1:] += k
        off = -k
        diag += self.w * self._zero_order(u, "d2")
        bl, br = self.beta
        e = self.b_exp
        if e != 1:
            diag[0] += self.b_weight * bl * e * (e - 1) * max(abs(u[0]), _CURV_EPS) ** (e - 2)
            diag[-1] += self.b_weight * br * e * (e - 1) * max(abs(u[-1]), _CURV_EPS) ** (e - 2)
        return diag, off


def _check_mesh(prob: ProblemSpec, mesh: Mesh):
    if abs(prob.interval[0] - mesh.a) > 1e-12 or abs(prob.interval[1] - mesh.b) > 1e-12:
        raise MeshMismatch("function mesh does not cover the problem interval")


def _barrier_on(spec: FunctionalSpec, mesh: Mesh):
    if spec.barrier is None:
        return None
    if not spec.barrier.mesh.same_as(mesh):
        raise MeshMismatch("barrier lives on a different mesh")
    return np.asarray(spec.barrier.values)


def build(spec: FunctionalSpec, op: OperatorSpec, prob: ProblemSpec, mesh: Mesh) -> NodalFunctional:
    _check_mesh(prob, mesh)
    if abs(op.p - prob.p) > 1e-12:
        raise ConfigError(f"operator p={op.p} differs from problem p={prob.p}")
    p = prob.p
    z = mesh.nodes
    xi = prob.xi_at(z)
    fam = spec.family
    if fam is Family.MU:
        return NodalFunctional(op, mesh, p, [_AbsPow(p * xi, p)], prob.beta, 1.0, p)
    if fam is Family.AUX_PSI:
        c9, c10, q, r = spec.aux_coeffs
        terms = [_AbsPow(np.abs(xi), p), _NegPow(1.0, p), _PosPow(c10, r), _PosPow(-c9, q)]
        return NodalFunctional(op, mesh, 1.0, terms, prob.beta, 1.0 / p, p)
    if fam in (Family.SUPER_PSI, Family.ROBIN_W):
        terms = [_AbsPow(xi, p), _NegPow(spec.eta, p), _MinusF(prob, z, spec.lam)]
        return NodalFunctional(op, mesh, 1.0, terms, prob.beta, 1.0 / p, p)
    mode = {
        Family.PHI_LAMBDA: TruncationMode.PLAIN_SHIFTED,
        Family.TRUNC_CAP: TruncationMode.CAP_ABOVE,
        Family.TRUNC_FLOOR: TruncationMode.FLOOR_BELOW,
    }[fam]
    b = _barrier_on(spec, mesh)
    tr = TruncatedReaction(mode, spec.lam, spec.eta, barrier=b, aux=spec.aux_coeffs)
    tr.validate(prob)
    terms = [_AbsPow(xi + spec.eta, p), _Reaction(tr, prob, z, b)]
    return NodalFunctional(op, mesh, 1.0, terms, prob.beta, 1.0 / p, p)


def assemble_mu(op: OperatorSpec, prob: ProblemSpec, u: DiscreteFunction) -> float:
    return build(FunctionalSpec(Family.MU), op, prob, u.mesh).value(u.values)


def energy(spec: FunctionalSpec, op: OperatorSpec, prob: ProblemSpec, u: DiscreteFunction) -> float:
    return build(spec, op, prob, u.mesh).value(u.values)


def gradient(spec: FunctionalSpec, op: OperatorSpec, prob: ProblemSpec, u: DiscreteFunction) -> DiscreteFunction:
    return DiscreteFunction(u.mesh, build(spec, op, prob, u.mesh).grad(u.values))


def mu_r(r: float, prob: ProblemSpec, mesh: Mesh) -> NodalFunctional:
    """mu built with the r-Laplacian, as in the eigenvalue problem."""
    _check_mesh(prob, mesh)
    op = OperatorSpec.p_laplace(r)
    xi = prob.xi_at(mesh.nodes)
    return NodalFunctional(op, mesh, r, [_AbsPow(r * xi, r)], prob.beta, 1.0, r)


def rayleigh(r: float, prob: ProblemSpec, u: DiscreteFunction) -> float:
    den = lp_power(u, r)
    if not den > 0:
        raise ZeroFunction("Rayleigh quotient of the zero function")
    return mu_r(r, prob, u.mesh).value(u.values) / den


@dataclass(frozen=True)
class DiazSaaProbe:
    u1: DiscreteFunction
    u2: DiscreteFunction
    m: int = 21
    q: float | None = None

    def __post_init__(self):
        if self.m < 3:
            raise ConfigError("probe needs m >= 3 segment points")
        if not self.u1.mesh.same_as(self.u2.mesh):
            raise MeshMismatch("probe functions live on different meshes")


@dataclass
class DiazSaaReport:
    violation: float
    chord_violation: float
    second_difference_violation: float
    values: np.ndarray


def diaz_saa_functional(op: OperatorSpec, prob: ProblemSpec, mesh: Mesh, q: float):
    """w -> int G(D w^(1/q)) + (1/p) int |xi| w^(p/q) + (1/p) sum beta w^(p/q)."""
    p = prob.p
    xi = np.abs(prob.xi_at(mesh.nodes))
    wts = np.asarray(mesh.weights)
    h = mesh.h
    bl, br = prob.beta

    def l(w):
        u = w ** (1.0 / q)
        val = h * float(np.sum(op.G0(np.abs(np.diff(u)) / h)))
        up = w ** (p / q)
        val += float(np.dot(wts, xi * up)) / p
        val += (bl * up[0] + br * up[-1]) / p
        return val

    return l


def diaz_saa_convexity(probe: DiazSaaProbe, op: OperatorSpec, prob: ProblemSpec) -> DiazSaaReport:
    u1, u2 = probe.u1, probe.u2
    if np.min(u1.values) <= 0 or np.min(u2.values) <= 0:
        raise NotPositive("Diaz-Saa probe needs strictly positive functions")
    q = op.q_convexity if probe.q is None else probe.q
    l = diaz_saa_functional(op, prob, u1.mesh, q)
    w1, w2 = u1.values**q, u2.values**q
    ts = np.linspace(0.0, 1.0, probe.m)
    vals = np.array([l((1 - t) * w1 + t * w2) for t in ts])
    chord = (1 - ts) * vals[0] + ts * vals[-1]
    cv = float(max(0.0, np.max(vals - chord)))
    sd = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    sv = float(max(0.0, -np.min(sd)))
    return DiazSaaReport(violation=max(cv, sv), chord_violation=cv, second_difference_violation=sv, values=vals)
