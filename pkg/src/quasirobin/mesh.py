"""Uniform P1 mesh on an interval, nodal functions, norms and cone tests."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, MeshMismatch


@dataclass(frozen=True)
class Mesh:
    a: float
    b: float
    n_cells: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a, b, n = float(self.a), float(self.b), int(self.n_cells)
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ConfigError(f"mesh interval must satisfy a < b, got ({a}, {b})")
        if n < 4:
            raise ConfigError(f"n_cells must be >= 4, got {n}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n_cells", n)
        nodes = np.linspace(a, b, n + 1)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        w = np.full(n + 1, (b - a) / n)
        w[0] = w[-1] = 0.5 * (b - a) / n
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def on(cls, interval, n_cells):
        return cls(interval[0], interval[1], n_cells)

    @property
    def h(self):
        return (self.b - self.a) / self.n_cells

    @property
    def n_nodes(self):
        return self.n_cells + 1

    def integrate(self, nodal):
        """Trapezoid rule for nodal samples."""
        return float(np.dot(self.weights, nodal))

    def function(self, values):
        return DiscreteFunction(self, values)

    def constant(self, c):
        return DiscreteFunction(self, np.full(self.n_nodes, float(c)))

    def sample(self, fn):
        return DiscreteFunction(self, np.asarray(fn(self.nodes), dtype=float))

    def same_as(self, other):
        return self.a == other.a and self.b == other.b and self.n_cells == other.n_cells


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if v.size != self.mesh.n_nodes:
            raise MeshMismatch(f"expected {self.mesh.n_nodes} nodal values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ConfigError("nodal values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def slopes(self):
        return np.diff(self.values) / self.mesh.h

    @property
    def positive_part(self):
        return DiscreteFunction(self.mesh, np.maximum(self.values, 0.0))

    @property
    def negative_part(self):
        return DiscreteFunction(self.mesh, np.maximum(-self.values, 0.0))

    def with_values(self, values):
        return DiscreteFunction(self.mesh, values)

    def __mul__(self, c):
        return DiscreteFunction(self.mesh, self.values * float(c))

    __rmul__ = __mul__

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def to_csv(self, header_lines=()):
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "u"])
        for z, u in zip(self.mesh.nodes, self.values):
            w.writerow([repr(float(z)), repr(float(u))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = [r for r in csv.reader(line for line in text.splitlines() if line and not line.startswith("#"))]
        if not rows or [c.strip() for c in rows[0][:2]] != ["z", "u"]:
            raise ConfigError("profile CSV must start with a z,u header")
        z = np.array([float(r[0]) for r in rows[1:]])
        u = np.array([float(r[1]) for r in rows[1:]])
        if z.size < 5:
            raise ConfigError("profile CSV has too few rows")
        mesh = Mesh(z[0], z[-1], z.size - 1)
        if not np.allclose(mesh.nodes, z, rtol=0, atol=1e-9 * max(1.0, abs(z[-1]))):
            raise ConfigError("profile nodes are not uniform")
        return cls(mesh, u)


def _check_same(u, v):
    if not u.mesh.same_as(v.mesh):
        raise MeshMismatch("functions live on different meshes")


def lp_power(u: DiscreteFunction, p: float) -> float:
    """Trapezoid ||u||_p^p."""
    return u.mesh.integrate(np.abs(u.values) ** p)


def grad_lp_power(u: DiscreteFunction, p: float) -> float:
    """Exact ||Du||_p^p for the piecewise linear interpolant."""
    return float(u.mesh.h * np.sum(np.abs(u.slopes) ** p))


def norm_W1p(u: DiscreteFunction, p: float) -> float:
    if not p > 1:
        raise ConfigError("p must exceed 1")
    return (lp_power(u, p) + grad_lp_power(u, p)) ** (1.0 / p)


def norm_Lr(u: DiscreteFunction, r: float) -> float:
    return lp_power(u, r) ** (1.0 / r)


def boundary_term(u: DiscreteFunction, beta, p: float) -> float:
    return float(beta[0] * abs(u.values[0]) ** p + beta[1] * abs(u.values[-1]) ** p)


def c1_distance(u: DiscreteFunction, v: DiscreteFunction) -> float:
    _check_same(u, v)
    d = u.values - v.values
    return float(np.max(np.abs(d)) + np.max(np.abs(np.diff(d))) / u.mesh.h)


class Cone(str, enum.Enum):
    IN_D_PLUS = "InDPlus"
    IN_C_PLUS_ONLY = "InCPlusOnly"
    OUTSIDE = "Outside"


def cone_check(u: DiscreteFunction, strict_tol: float = 1e-8) -> Cone:
    m = float(np.min(u.values))
    if m > strict_tol:
        return Cone.IN_D_PLUS
    if m >= -strict_tol:
        return Cone.IN_C_PLUS_ONLY
    return Cone.OUTSIDE
