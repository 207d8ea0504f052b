"""Problem data: interval, potential xi, Robin weights beta, the reaction f with
its primitive, and the truncated reactions built from it."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import BarrierMissing, ConfigError, NotFound, QuadratureError

_TINY = 1e-300


class PerturbationKind(str, enum.Enum):
    SUBLINEAR_EXAMPLE = "sublinear_example"
    SUPERLINEAR_AR = "superlinear_ar"
    SUPERLINEAR_NON_AR = "superlinear_non_ar"
    POWER_SUM = "power_sum"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ClassFlags:
    sublinear_H1: bool = False
    strictly_positive: bool = False
    superlinear_H2: bool = False
    unique_H1pp: bool = False


def _pw(x, e):
    """x**e for x >= 0, tolerant of x = 0 with negative e (returns inf there)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.power(x, e)


@dataclass(frozen=True)
class PerturbationSpec:
    """Reaction term f(z, x); z-independent except for the custom kind.

    ``params`` per kind:

    * sublinear_example: tau, q, r, s
    * superlinear_ar: tau, theta, r, p
    * superlinear_non_ar: tau, theta, p
    * power_sum: terms = [(c, e), ...] meaning sum c x^(e-1); optional cap
      beyond which f is frozen at f(cap)
    * custom: callable ``func(z, x)``; optional ``primitive(z, x)``,
      ``derivative(z, x)``, ``class_flags`` and auxiliary exponents
      ``q_aux``/``r_aux``
    """

    kind: PerturbationKind
    params: dict = field(default_factory=dict)
    func: Callable | None = None

    def __post_init__(self):
        kind = PerturbationKind(self.kind)
        object.__setattr__(self, "kind", kind)
        pr = dict(self.params)
        need = {
            PerturbationKind.SUBLINEAR_EXAMPLE: ("tau", "q", "r", "s"),
            PerturbationKind.SUPERLINEAR_AR: ("tau", "theta", "r", "p"),
            PerturbationKind.SUPERLINEAR_NON_AR: ("tau", "theta", "p"),
            PerturbationKind.POWER_SUM: ("terms",),
            PerturbationKind.CUSTOM: (),
        }[kind]
        missing = [k for k in need if k not in pr]
        if missing:
            raise ConfigError(f"{kind.value} perturbation is missing {missing}")
        if kind is PerturbationKind.POWER_SUM:
            terms = tuple((float(c), float(e)) for c, e in pr["terms"])
            if not terms:
                raise ConfigError("power_sum needs at least one term")
            if any(e <= 1.0 for _, e in terms):
                raise ConfigError("power_sum exponents must exceed 1 so that f(0) = 0")
            pr["terms"] = terms
            cap = pr.get("cap")
            if cap is not None and not cap > 0:
                raise ConfigError("power_sum cap must be positive")
        elif kind is PerturbationKind.CUSTOM:
            if self.func is None:
                raise ConfigError("custom perturbation needs a callable")
        else:
            for k in need:
                try:
                    pr[k] = float(pr[k])
                except (TypeError, ValueError):
                    raise ConfigError(f"parameter {k} must be a number, got {pr[k]!r}") from None
                if pr[k] <= 1.0:
                    raise ConfigError(f"exponent {k} must exceed 1")
        object.__setattr__(self, "params", pr)
        self._check_breakpoints()

    # -- constructors ------------------------------------------------------

    @classmethod
    def sublinear_example(cls, tau, q, r, s):
        return cls(PerturbationKind.SUBLINEAR_EXAMPLE, dict(tau=tau, q=q, r=r, s=s))

    @classmethod
    def superlinear_ar(cls, tau, theta, r, p):
        return cls(PerturbationKind.SUPERLINEAR_AR, dict(tau=tau, theta=theta, r=r, p=p))

    @classmethod
    def superlinear_non_ar(cls, tau, theta, p):
        return cls(PerturbationKind.SUPERLINEAR_NON_AR, dict(tau=tau, theta=theta, p=p))

    @classmethod
    def power_sum(cls, terms, cap=None):
        return cls(PerturbationKind.POWER_SUM, dict(terms=terms, cap=cap))

    @classmethod
    def custom(cls, func, **params):
        return cls(PerturbationKind.CUSTOM, params, func=func)

    # -- pieces --------------------------------------------------------------

    def _pieces(self):
        """(low, high) lists of (coef, exponent) with f = sum c x^(e-1) on each
        side of x = 1, for the two-piece power kinds."""
        pr = self.params
        k = self.kind
        if k is PerturbationKind.SUBLINEAR_EXAMPLE:
            return [(1.0, pr["tau"]), (-2.0, pr["q"])], [(1.0, pr["r"]), (-2.0, pr["s"])]
        if k is PerturbationKind.SUPERLINEAR_AR:
            return [(1.0, pr["tau"]), (-2.0, pr["theta"])], [(1.0, pr["r"]), (-2.0, pr["p"])]
        return [(1.0, pr["tau"]), (-2.0, pr["theta"])], None

    def _check_breakpoints(self):
        k = self.kind
        if k in (PerturbationKind.POWER_SUM, PerturbationKind.CUSTOM):
            return
        lo = self.f(np.array([1.0]))[0]
        up = self._upper_f(np.array([1.0]))[0]
        if abs(lo - up) > 1e-12:
            raise ConfigError(f"perturbation is discontinuous at x = 1 ({lo} vs {up})")

    def _upper_f(self, x):
        if self.kind is PerturbationKind.SUPERLINEAR_NON_AR:
            p = self.params["p"]
            return _pw(x, p - 1) * (np.log(np.maximum(x, _TINY)) - 1.0)
        _, high = self._pieces()
        return sum(c * _pw(x, e - 1) for c, e in high)

    # -- evaluation ----------------------------------------------------------

    def f(self, x, z=None):
        x = np.asarray(x, dtype=float)
        pos = np.maximum(x, 0.0)
        k = self.kind
        if k is PerturbationKind.CUSTOM:
            return self._custom(self.func, x, z, zero_below=True)
        if k is PerturbationKind.POWER_SUM:
            cap = self.params.get("cap")
            xc = pos if cap is None else np.minimum(pos, cap)
            val = sum(c * _pw(xc, e - 1) for c, e in self.params["terms"])
            return np.where(x > 0, val, 0.0)
        low, _ = self._pieces()
        lowv = sum(c * _pw(np.minimum(pos, 1.0), e - 1) for c, e in low)
        highv = self._upper_f(np.maximum(pos, 1.0))
        return np.where(x <= 0, 0.0, np.where(x <= 1.0, lowv, highv))

    def F(self, x, z=None):
        x = np.asarray(x, dtype=float)
        pos = np.maximum(x, 0.0)
        k = self.kind
        if k is PerturbationKind.CUSTOM:
            prim = self.params.get("primitive")
            if prim is not None:
                return self._custom(prim, x, z, zero_below=True)
            return self._custom_quad(x, z)
        if k is PerturbationKind.POWER_SUM:
            terms = self.params["terms"]
            cap = self.params.get("cap")
            xc = pos if cap is None else np.minimum(pos, cap)
            val = sum(c * xc**e / e for c, e in terms)
            if cap is not None:
                fcap = sum(c * cap ** (e - 1) for c, e in terms)
                val = val + fcap * np.maximum(pos - cap, 0.0)
            return val
        low, high = self._pieces()
        xl = np.minimum(pos, 1.0)
        val = sum(c * xl**e / e for c, e in low)
        F1 = sum(c / e for c, e in low)
        xh = np.maximum(pos, 1.0)
        if high is not None:
            up = sum(c * (xh**e - 1.0) / e for c, e in high)
        else:
            p = self.params["p"]
            lx = np.log(xh)
            up = (xh**p * lx / p - xh**p / p**2 - xh**p / p) - (-1.0 / p**2 - 1.0 / p)
        return np.where(pos <= 1.0, val, F1 + up)

    def df(self, x, z=None, eps=1e-12):
        """Derivative in x for x > 0 (x clamped to eps); 0 for x < 0."""
        x = np.asarray(x, dtype=float)
        xe = np.maximum(x, eps)
        k = self.kind
        if k is PerturbationKind.CUSTOM:
            d = self.params.get("derivative")
            if d is not None:
                return np.where(x > 0, self._custom(d, xe, z, zero_below=False), 0.0)
            h = 1e-6 * np.maximum(xe, 1e-3)
            lo = np.maximum(xe - h, 0.0)
            return np.where(x > 0, (self.f(xe + h, z) - self.f(lo, z)) / (xe + h - lo), 0.0)
        if k is PerturbationKind.POWER_SUM:
            cap = self.params.get("cap")
            val = sum(c * (e - 1) * xe ** (e - 2) for c, e in self.params["terms"])
            if cap is not None:
                val = np.where(x > cap, 0.0, val)
            return np.where(x > 0, val, 0.0)
        low, high = self._pieces()
        lowv = sum(c * (e - 1) * xe ** (e - 2) for c, e in low)
        if high is not None:
            highv = sum(c * (e - 1) * xe ** (e - 2) for c, e in high)
        else:
            p = self.params["p"]
            highv = xe ** (p - 2) * ((p - 1) * (np.log(xe) - 1.0) + 1.0)
        return np.where(x <= 0, 0.0, np.where(x <= 1.0, lowv, highv))

    def _custom(self, fn, x, z, zero_below):
        zz = np.zeros_like(x) if z is None else np.broadcast_to(np.asarray(z, dtype=float), x.shape)
        out = np.array([float(fn(zi, xi)) for zi, xi in zip(zz.ravel(), x.ravel())]).reshape(x.shape)
        if zero_below:
            out = np.where(x > 0, out, 0.0)
        return out

    def _custom_quad(self, x, z):
        zz = np.zeros_like(x) if z is None else np.broadcast_to(np.asarray(z, dtype=float), x.shape)
        out = np.empty(x.size)
        for i, (zi, xi) in enumerate(zip(zz.ravel(), x.ravel())):
            if xi <= 0:
                out[i] = 0.0
                continue
            val, err = integrate.quad(lambda s: float(self.func(zi, s)), 0.0, xi, epsabs=1e-10, limit=200)
            if not np.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
                raise QuadratureError(f"primitive quadrature failed at x={xi} (err={err:.2e})")
            out[i] = val
        return out.reshape(x.shape)

    # -- classification ------------------------------------------------------

    def class_flags(self, p: float) -> ClassFlags:
        pr = self.params
        k = self.kind
        if k is PerturbationKind.CUSTOM:
            cf = pr.get("class_flags") or {}
            return ClassFlags(**cf) if isinstance(cf, dict) else cf
        if k is PerturbationKind.SUBLINEAR_EXAMPLE:
            ok = 1 < pr["tau"] < pr["q"] <= p and 1 < pr["s"] < pr["r"] < p
            return ClassFlags(sublinear_H1=ok)
        if k is PerturbationKind.SUPERLINEAR_AR:
            ok = 1 < pr["tau"] < pr["theta"] < p < pr["r"] and abs(pr["p"] - p) < 1e-12
            return ClassFlags(superlinear_H2=ok)
        if k is PerturbationKind.SUPERLINEAR_NON_AR:
            ok = 1 < pr["tau"] < pr["theta"] < p and abs(pr["p"] - p) < 1e-12
            return ClassFlags(superlinear_H2=ok)
        terms = pr["terms"]
        cap = pr.get("cap")
        positive = all(c > 0 for c, _ in terms)
        emin = min(e for _, e in terms)
        emax = max(e for _, e in terms)
        bounded_growth = cap is not None or emax < p
        sub = bounded_growth and emin < p and sum(c for c, e in terms if e == emin) > 0
        # f/x^(p-1) strictly decreasing when every term has exponent below p
        uniq = positive and sub and emax < p
        lead = sum(c for c, e in terms if e == emax)
        sup = cap is None and emax > p and lead > 0 and emin < p and sum(c for c, e in terms if e == emin) > 0
        return ClassFlags(sublinear_H1=sub, strictly_positive=positive, superlinear_H2=sup, unique_H1pp=uniq)

    def aux_exponents(self, p: float):
        """(q, r) for the barrier lower bound c9 x^(q-1) - c10 x^(r-1)."""
        pr = self.params
        k = self.kind
        if k is PerturbationKind.CUSTOM:
            if "q_aux" not in pr or "r_aux" not in pr:
                return None
            return float(pr["q_aux"]), float(pr["r_aux"])
        if k is PerturbationKind.POWER_SUM:
            terms = pr["terms"]
            emin = min(e for _, e in terms)
            emax = max(e for _, e in terms)
            return min(emin, p), max(emax, p + 1.0)
        if k is PerturbationKind.SUBLINEAR_EXAMPLE:
            return pr["tau"], p + 1.0
        if k is PerturbationKind.SUPERLINEAR_AR:
            return pr["tau"], max(pr["r"], p + 1.0)
        return pr["tau"], p + 2.0


@dataclass(frozen=True)
class ProblemSpec:
    interval: tuple[float, float]
    xi: float | tuple | Callable
    beta: tuple[float, float]
    perturbation: PerturbationSpec
    p: float
    xi_inf_norm: float = field(init=False)

    def __post_init__(self):
        a, b = (float(v) for v in self.interval)
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ConfigError(f"interval must satisfy a < b, got {self.interval}")
        object.__setattr__(self, "interval", (a, b))
        bl, br = (float(v) for v in self.beta)
        if bl < 0 or br < 0 or not (np.isfinite(bl) and np.isfinite(br)):
            raise ConfigError(f"Robin weights must be finite and nonnegative, got {self.beta}")
        object.__setattr__(self, "beta", (bl, br))
        if not (self.p > 1 and np.isfinite(self.p)):
            raise ConfigError("p must satisfy 1 < p < inf")
        xi = self.xi
        if callable(xi):
            samples = np.asarray([xi(z) for z in np.linspace(a, b, 1025)], dtype=float)
        elif np.ndim(xi) == 0:
            samples = np.array([float(xi)])
            object.__setattr__(self, "xi", float(xi))
        else:
            samples = np.asarray(xi, dtype=float)
            if samples.ndim != 1 or samples.size < 2:
                raise ConfigError("nodal xi needs at least two samples")
            object.__setattr__(self, "xi", tuple(samples.tolist()))
        if not np.all(np.isfinite(samples)):
            raise ConfigError("xi must be bounded")
        object.__setattr__(self, "xi_inf_norm", float(np.max(np.abs(samples))))
        pert = self.perturbation
        if pert.kind in (PerturbationKind.SUPERLINEAR_AR, PerturbationKind.SUPERLINEAR_NON_AR):
            if abs(pert.params["p"] - self.p) > 1e-12:
                raise ConfigError("perturbation exponent p differs from the problem exponent")

    @property
    def length(self):
        return self.interval[1] - self.interval[0]

    def xi_at(self, z):
        z = np.asarray(z, dtype=float)
        xi = self.xi
        if callable(xi):
            return np.asarray(np.vectorize(xi, otypes=[float])(z), dtype=float)
        if isinstance(xi, float):
            return np.full_like(z, xi)
        pts = np.linspace(self.interval[0], self.interval[1], len(xi))
        return np.interp(z, pts, np.asarray(xi))

    @property
    def flags(self) -> ClassFlags:
        return self.perturbation.class_flags(self.p)

    def is_constant_xi(self):
        return isinstance(self.xi, float)


def eval_f(prob: ProblemSpec, z, x):
    return prob.perturbation.f(x, z)


def eval_F(prob: ProblemSpec, z, x):
    return prob.perturbation.F(x, z)


def eval_d(prob: ProblemSpec, z, x):
    """d(z, x) = f(z, x) x - p F(z, x)."""
    x = np.asarray(x, dtype=float)
    return prob.perturbation.f(x, z) * x - prob.p * prob.perturbation.F(x, z)


def d_max_decrease(prob: ProblemSpec, grid, z=None):
    """Largest drop d(x) - d(y) over x <= y on ``grid`` (an empirical nu)."""
    d = eval_d(prob, z, np.sort(np.asarray(grid, dtype=float)))
    return float(max(0.0, np.max(np.maximum.accumulate(d) - d)))


def ar_ratio(prob: ProblemSpec, grid=None, z=None):
    """min of f(x) x / F(x) over a far-field grid; the AR condition asks for a
    value bounded away from p."""
    x = np.logspace(3, 8, 64) if grid is None else np.asarray(grid, dtype=float)
    F = prob.perturbation.F(x, z)
    f = prob.perturbation.f(x, z)
    if np.any(F <= 0):
        return -math.inf
    return float(np.min(f * x / F))


def satisfies_ar(prob: ProblemSpec, margin=0.1):
    return ar_ratio(prob) > prob.p * (1.0 + margin)


def _z_samples(prob: ProblemSpec, n=9):
    if prob.perturbation.kind is PerturbationKind.CUSTOM:
        return np.linspace(prob.interval[0], prob.interval[1], n)
    return np.array([prob.interval[0]])


def estimate_xi_hat(prob: ProblemSpec, rho: float, n_grid: int = 2001) -> float:
    """Smallest shift making x -> f(z, x) + xi_hat x^(p-1) nondecreasing on the
    sampled grid of [0, rho].

    On a grid the optimum is explicit: each adjacent pair requires
    xi_hat >= -(f(x2) - f(x1)) / (x2^(p-1) - x1^(p-1)).
    """
    if not rho > 0:
        raise ConfigError("rho must be positive")
    x = np.linspace(0.0, float(rho), int(n_grid))
    w = x ** (prob.p - 1)
    dw = np.diff(w)
    best = 0.0
    for z in _z_samples(prob):
        df = np.diff(prob.perturbation.f(x, z))
        best = max(best, float(np.max(-df / dw)))
    if not np.isfinite(best) or best > 1e6:
        raise NotFound(f"no monotonizing shift <= 1e6 on [0, {rho}] (need {best:.3g})")
    return max(best, 0.0)


class TruncationMode(str, enum.Enum):
    PLAIN_SHIFTED = "plain_shifted"
    CAP_ABOVE = "cap_above"
    FLOOR_BELOW = "floor_below"


@dataclass(frozen=True)
class TruncatedReaction:
    """Shifted reaction e(x) with optional freezing at a barrier b(z).

    The base is (lam + eta) x^(p-1) + f(z, x), or, when ``aux`` = (c9, c10, q, r)
    is given, c9 x^(q-1) - c10 x^(r-1) + eta x^(p-1).
    """

    mode: TruncationMode
    lam: float
    eta: float
    barrier: object = None  # DiscreteFunction or nodal array
    aux: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", TruncationMode(self.mode))
        if not self.eta > 0:
            raise ConfigError("eta must be positive")
        if self.mode is not TruncationMode.PLAIN_SHIFTED:
            if self.barrier is None:
                raise BarrierMissing(f"{self.mode.value} truncation needs a barrier")
            if np.min(self.barrier_values()) <= 0:
                raise ConfigError("barrier must be strictly positive at every node")

    def barrier_values(self):
        b = self.barrier
        if b is None:
            return None
        return np.asarray(getattr(b, "values", b), dtype=float)

    def validate(self, prob: ProblemSpec):
        if not self.eta > prob.xi_inf_norm:
            raise ConfigError(f"eta={self.eta} must exceed ||xi||_inf={prob.xi_inf_norm}")

    # base reaction on x >= 0 and its primitive
    def _base(self, prob, z, x):
        p = prob.p
        if self.aux is not None:
            c9, c10, q, r = self.aux
            return c9 * _pw(x, q - 1) - c10 * _pw(x, r - 1) + self.eta * _pw(x, p - 1)
        return (self.lam + self.eta) * _pw(x, p - 1) + prob.perturbation.f(x, z)

    def _base_prim(self, prob, z, x):
        p = prob.p
        if self.aux is not None:
            c9, c10, q, r = self.aux
            return c9 * x**q / q - c10 * x**r / r + self.eta * x**p / p
        return (self.lam + self.eta) * x**p / p + prob.perturbation.F(x, z)

    def _base_d(self, prob, z, x, eps=1e-12):
        p = prob.p
        xe = np.maximum(x, eps)
        if self.aux is not None:
            c9, c10, q, r = self.aux
            return (c9 * (q - 1) * xe ** (q - 2) - c10 * (r - 1) * xe ** (r - 2)
                    + self.eta * (p - 1) * xe ** (p - 2))
        return (self.lam + self.eta) * (p - 1) * xe ** (p - 2) + prob.perturbation.df(xe, z)

    def _b(self, x):
        b = self.barrier_values()
        if b is None:
            raise BarrierMissing(f"{self.mode.value} truncation needs a barrier")
        return np.broadcast_to(b, np.shape(x)) if np.ndim(x) else b

    def value(self, prob, z, x, b=None):
        x = np.asarray(x, dtype=float)
        pos = np.maximum(x, 0.0)
        if self.mode is TruncationMode.PLAIN_SHIFTED:
            return np.where(x > 0, self._base(prob, z, pos), 0.0)
        b = self._b(x) if b is None else b
        eb = self._base(prob, z, b)
        if self.mode is TruncationMode.CAP_ABOVE:
            inner = self._base(prob, z, np.minimum(pos, b))
            return np.where(x < 0, 0.0, np.where(x <= b, inner, eb))
        return np.where(x <= b, eb, self._base(prob, z, np.maximum(x, b)))

    def primitive(self, prob, z, x, b=None):
        x = np.asarray(x, dtype=float)
        pos = np.maximum(x, 0.0)
        if self.mode is TruncationMode.PLAIN_SHIFTED:
            return self._base_prim(prob, z, pos)
        b = self._b(x) if b is None else b
        eb = self._base(prob, z, b)
        if self.mode is TruncationMode.CAP_ABOVE:
            return self._base_prim(prob, z, np.minimum(pos, b)) + eb * np.maximum(x - b, 0.0)
        above = self._base_prim(prob, z, np.maximum(x, b)) - self._base_prim(prob, z, b)
        return eb * np.minimum(x, b) + above

    def derivative(self, prob, z, x, b=None):
        x = np.asarray(x, dtype=float)
        if self.mode is TruncationMode.PLAIN_SHIFTED:
            return np.where(x > 0, self._base_d(prob, z, x), 0.0)
        b = self._b(x) if b is None else b
        if self.mode is TruncationMode.CAP_ABOVE:
            return np.where((x > 0) & (x < b), self._base_d(prob, z, x), 0.0)
        return np.where(x > b, self._base_d(prob, z, x), 0.0)


def eval_truncated(tr: TruncatedReaction, prob: ProblemSpec, node_index, x, z=None):
    """Truncated reaction at one node; the barrier supplies both b(z) and z."""
    tr.validate(prob)
    b = None
    if tr.mode is not TruncationMode.PLAIN_SHIFTED:
        bv = tr.barrier_values()
        if bv is None:
            raise BarrierMissing(f"{tr.mode.value} truncation needs a barrier")
        b = bv[node_index]
        mesh = getattr(tr.barrier, "mesh", None)
        if z is None and mesh is not None:
            z = mesh.nodes[node_index]
    return float(tr.value(prob, z, np.asarray(float(x)), b))
