"""Radial flux maps a(y) = a0(|y|) y, their primitives G, and a sampled audit of
the structural hypotheses they are expected to satisfy.

Everything here is one dimensional: gradients are scalars, so ``a`` is an odd
scalar function and ``flux_derivative`` is its ordinary derivative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, GridError


class OperatorKind(str, enum.Enum):
    P_LAPLACE = "p_laplace"
    PQ_LAPLACE = "pq_laplace"
    MEAN_CURVATURE = "mean_curvature"
    PERTURBED = "perturbed"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class GrowthWitness:
    """Constants of the growth bounds on the auxiliary function theta.

    Only ``c1`` is used quantitatively (lower bounds on (a(y), y) and G);
    the rest are recorded as supplied.
    """

    c_hat: float
    c0: float
    c1: float
    c2: float
    tau: float = 1.0


@dataclass(frozen=True)
class OperatorSpec:
    kind: OperatorKind
    p: float
    q_secondary: float | None = None
    q_convexity: float | None = None
    growth_witness: GrowthWitness | None = None
    regularization_eps: float = 1e-12
    # (t, a0(t)) samples, only for TABULATED
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    _tab: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = OperatorKind(self.kind)
        object.__setattr__(self, "kind", kind)
        p = float(self.p)
        if not (p > 1.0 and np.isfinite(p)):
            raise ConfigError(f"operator exponent p must satisfy 1 < p < inf, got {self.p}")
        if kind is OperatorKind.PQ_LAPLACE:
            q2 = self.q_secondary
            if q2 is None or not (1.0 < q2 < p):
                raise ConfigError("pq_laplace needs 1 < q_secondary < p")
        q = self.q_convexity
        if q is None:
            q = _default_q(kind, p, self.q_secondary)
            object.__setattr__(self, "q_convexity", q)
        if not (1.0 < q <= p + 1e-14):
            raise ConfigError(f"q_convexity must lie in (1, p], got {q}")
        if self.growth_witness is None:
            object.__setattr__(self, "growth_witness", _default_witness(kind, p))
        if self.regularization_eps <= 0:
            raise ConfigError("regularization_eps must be positive")
        if kind is OperatorKind.TABULATED:
            if self.table is None:
                raise ConfigError("tabulated operator needs a0 samples")
            object.__setattr__(self, "_tab", _Tabulated(self.table, p))

    @classmethod
    def p_laplace(cls, p, **kw):
        return cls(OperatorKind.P_LAPLACE, p, **kw)

    @classmethod
    def pq_laplace(cls, p, q, **kw):
        return cls(OperatorKind.PQ_LAPLACE, p, q_secondary=q, **kw)

    @classmethod
    def mean_curvature(cls, p, **kw):
        return cls(OperatorKind.MEAN_CURVATURE, p, **kw)

    @classmethod
    def perturbed(cls, p, **kw):
        return cls(OperatorKind.PERTURBED, p, **kw)

    @classmethod
    def tabulated(cls, t, a0, p, **kw):
        return cls(OperatorKind.TABULATED, p, table=(tuple(map(float, t)), tuple(map(float, a0))), **kw)

    # -- pointwise maps, all vectorised over numpy arrays --------------------

    def flux_modulus(self, t):
        """t -> a0(t) t for t >= 0."""
        t = np.asarray(t, dtype=float)
        p = self.p
        kind = self.kind
        if kind is OperatorKind.P_LAPLACE:
            return t ** (p - 1)
        if kind is OperatorKind.PQ_LAPLACE:
            return t ** (p - 1) + t ** (self.q_secondary - 1)
        if kind is OperatorKind.MEAN_CURVATURE:
            return (1.0 + t * t) ** ((p - 2) / 2) * t
        if kind is OperatorKind.PERTURBED:
            tp = t**p
            return t ** (p - 1) * (1.0 + 1.0 / (1.0 + tp))
        return self._tab.phi(t)

    def a0(self, t):
        t = np.maximum(np.asarray(t, dtype=float), self.regularization_eps)
        return self.flux_modulus(t) / t

    def G0(self, t):
        t = np.asarray(t, dtype=float)
        p = self.p
        kind = self.kind
        if kind is OperatorKind.P_LAPLACE:
            return t**p / p
        if kind is OperatorKind.PQ_LAPLACE:
            q = self.q_secondary
            return t**p / p + t**q / q
        if kind is OperatorKind.MEAN_CURVATURE:
            return np.expm1(0.5 * p * np.log1p(t * t)) / p
        if kind is OperatorKind.PERTURBED:
            tp = t**p
            return (tp + np.log1p(tp)) / p
        return self._tab.G0(t)

    def modulus_derivative(self, t):
        """d/dt [a0(t) t], with t clamped below by regularization_eps."""
        t = np.maximum(np.asarray(t, dtype=float), self.regularization_eps)
        p = self.p
        kind = self.kind
        if kind is OperatorKind.P_LAPLACE:
            return (p - 1) * t ** (p - 2)
        if kind is OperatorKind.PQ_LAPLACE:
            q = self.q_secondary
            return (p - 1) * t ** (p - 2) + (q - 1) * t ** (q - 2)
        if kind is OperatorKind.MEAN_CURVATURE:
            t2 = t * t
            return (1.0 + t2) ** ((p - 4) / 2) * (1.0 + (p - 1) * t2)
        if kind is OperatorKind.PERTURBED:
            tp = t**p
            return (p - 1) * t ** (p - 2) + t ** (p - 2) * (p - 1 - tp) / (1.0 + tp) ** 2
        return self._tab.dphi(t)


def _default_q(kind, p, q2):
    if kind is OperatorKind.PQ_LAPLACE:
        return float(q2)
    if kind is OperatorKind.MEAN_CURVATURE:
        return min(2.0, p)
    if kind is OperatorKind.PERTURBED:
        # log1p(t^p) spoils convexity of G0(s^(1/q)) for q near p
        return 1.0 + 0.4 * (p - 1.0)
    return p


def _default_witness(kind, p):
    # theta(t) = (p-1) t^(p-1) reproduces the p-Laplacian bounds with equality
    return GrowthWitness(c_hat=p - 1, c0=p - 1, c1=p - 1, c2=p - 1, tau=1.0)


class _Tabulated:
    """Monotone-cubic interpolant of t -> a0(t) t with exact antiderivative."""

    def __init__(self, table, p):
        t, a0 = (np.asarray(v, dtype=float) for v in table)
        if t.ndim != 1 or t.shape != a0.shape or t.size < 4:
            raise ConfigError("tabulated operator needs >= 4 matching (t, a0) samples")
        if np.any(np.diff(t) <= 0) or t[0] <= 0:
            raise ConfigError("tabulated t samples must be positive and strictly increasing")
        if np.any(a0 <= 0):
            raise ConfigError("a0 samples must be positive")
        self.p = p
        ts = np.concatenate([[0.0], t])
        phis = np.concatenate([[0.0], a0 * t])
        self.t_max = t[-1]
        self.interp = PchipInterpolator(ts, phis, extrapolate=False)
        self.prim = self.interp.antiderivative()
        self.dinterp = self.interp.derivative()
        self.phi_max = phis[-1]
        self.G_max = float(self.prim(self.t_max))

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.minimum(t, self.t_max)
        out = np.asarray(self.interp(inside), dtype=float)
        # beyond the table: a0 continues as a power with exponent p - 2
        tail = self.phi_max * (np.maximum(t, self.t_max) / self.t_max) ** (self.p - 1)
        return np.where(t > self.t_max, tail, out)

    def dphi(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.dinterp(np.minimum(t, self.t_max)), dtype=float)
        s = np.maximum(t, self.t_max) / self.t_max
        tail = self.phi_max * (self.p - 1) * s ** (self.p - 2) / self.t_max
        return np.where(t > self.t_max, tail, out)

    def G0(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.prim(np.minimum(t, self.t_max)), dtype=float)
        s = np.maximum(t, self.t_max) / self.t_max
        tail = self.G_max + self.phi_max * self.t_max * (s**self.p - 1.0) / self.p
        return np.where(t > self.t_max, tail, out)


def eval_a(spec: OperatorSpec, y):
    """Flux a(y) = a0(|y|) y; odd in y and zero at y = 0."""
    y = np.asarray(y, dtype=float)
    return np.sign(y) * spec.flux_modulus(np.abs(y))


def eval_G(spec: OperatorSpec, y):
    """Energy density G(y) = G0(|y|), the primitive of ``eval_a``."""
    return spec.G0(np.abs(np.asarray(y, dtype=float)))


def flux_derivative(spec: OperatorSpec, y):
    """Scalar derivative of ``eval_a`` (the 1D gradient of a)."""
    return spec.modulus_derivative(np.abs(np.asarray(y, dtype=float)))


def default_grid():
    return np.logspace(-6.0, 3.0, 64)


@dataclass
class CheckResult:
    passed: bool
    max_violation: float


@dataclass
class HypothesisReport:
    checks: dict[str, CheckResult]
    c5: float
    grid_size: int

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())

    def as_dict(self):
        return {
            "passed": self.passed,
            "c5": self.c5,
            "grid_size": self.grid_size,
            "checks": {k: {"passed": v.passed, "max_violation": v.max_violation} for k, v in self.checks.items()},
        }


_REL_TOL = 1e-10


def _sup_ratio(spec, lo, hi):
    """Upper bound for sup G0(t) / (1 + t^p) on [0, hi]; a dense log grid
    refined by a bounded search around its best point."""
    def ratio(s):
        t = np.exp(s)
        return spec.G0(t) / (1.0 + t**spec.p)

    s = np.linspace(np.log(min(lo, 1e-6)), np.log(hi), 4097)
    vals = ratio(s)
    i = int(np.argmax(vals))
    best = float(vals[i])
    a, b = s[max(i - 1, 0)], s[min(i + 1, s.size - 1)]
    res = optimize.minimize_scalar(lambda x: -float(ratio(x)), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-12})
    best = max(best, -float(res.fun))
    return best * (1.0 + 1e-9)


def check_hypotheses(spec: OperatorSpec, grid=None) -> HypothesisReport:
    """Sampled audit of the structural conditions on a(.) over ``grid``.

    Violations are relative to the size of the compared quantities, so that
    exact identities (e.g. p G0 = a0 t^2 for the p-Laplacian) pass despite
    rounding at large t.
    """
    t = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 16:
        raise GridError("grid must be one dimensional with at least 16 points")
    if not np.all(np.isfinite(t)) or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise GridError("grid must be positive, finite and strictly increasing")

    p = spec.p
    q = spec.q_convexity
    c1 = spec.growth_witness.c1
    phi = spec.flux_modulus(t)
    G = spec.G0(t)
    checks = {}

    # strict monotonicity of t -> a0(t) t
    d = np.diff(phi)
    viol = float(max(0.0, np.max(-d / np.maximum(phi[1:], 1e-300))))
    checks["flux_strictly_increasing"] = CheckResult(bool(np.all(d > 0)), viol)

    # 0 <= p G0(t) - a0(t) t^2
    gap = p * G - phi * t
    rel = gap / np.maximum(p * G, 1e-300)
    viol = float(max(0.0, -np.min(rel)))
    checks["energy_flux_gap"] = CheckResult(viol <= _REL_TOL, viol)

    # midpoint convexity of s -> G0(s^(1/q)) on s = t^q
    s = t**q
    mid = 0.5 * (s[:-1] + s[1:])
    lhs = spec.G0(mid ** (1.0 / q))
    rhs = 0.5 * (G[:-1] + G[1:])
    viol = float(max(0.0, np.max((lhs - rhs) / np.maximum(rhs, 1e-300))))
    checks["q_convexity"] = CheckResult(viol <= _REL_TOL, viol)

    # c1/(p(p-1)) t^p <= G0(t) <= c5 (1 + t^p)
    lower = c1 / (p * (p - 1)) * t**p
    viol = float(max(0.0, np.max((lower - G) / np.maximum(G, 1e-300))))
    c5 = _sup_ratio(spec, t[0], t[-1])
    checks["energy_sandwich"] = CheckResult(viol <= _REL_TOL, viol)

    # (a(y), y) >= c1/(p-1) |y|^p
    ay = phi * t
    lower = c1 / (p - 1) * t**p
    viol = float(max(0.0, np.max((lower - ay) / np.maximum(ay, 1e-300))))
    checks["flux_coercivity"] = CheckResult(viol <= _REL_TOL, viol)

    return HypothesisReport(checks=checks, c5=c5, grid_size=int(t.size))
