"""JSON run configuration: parsing, cross-field validation and conversion to
the solver specs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .operator import GrowthWitness, OperatorSpec
from .problem import PerturbationSpec, ProblemSpec
from .solve.params import MountainPassParams, SolverParams

COMMANDS = ("hypcheck", "eigen", "solve", "second", "sweep", "lambda-star", "verify")


def _take(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {unknown}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class OperatorConfig:
    kind: str = "p_laplace"
    p: float = 2.0
    q_secondary: float | None = None
    q_convexity: float | None = None
    regularization_eps: float = 1e-12
    growth_witness: dict | None = None
    table: dict | None = None

    def build(self) -> OperatorSpec:
        gw = None
        if self.growth_witness is not None:
            gw = _take(GrowthWitness, self.growth_witness, "operator.growth_witness")
        table = None
        if self.table is not None:
            if set(self.table) != {"t", "a0"}:
                raise ConfigError("operator.table needs exactly the keys 't' and 'a0'")
            table = (tuple(map(float, self.table["t"])), tuple(map(float, self.table["a0"])))
        try:
            return OperatorSpec(self.kind, float(self.p), q_secondary=self.q_secondary,
                                q_convexity=self.q_convexity, growth_witness=gw,
                                regularization_eps=self.regularization_eps, table=table)
        except ValueError as exc:
            raise ConfigError(f"operator: {exc}") from None


@dataclass
class ProblemConfig:
    interval: list = field(default_factory=lambda: [0.0, 1.0])
    xi: float | dict = field(default_factory=lambda: {"const": 0.0})
    beta: list = field(default_factory=lambda: [0.0, 0.0])
    f: dict = field(default_factory=lambda: {"kind": "power_sum", "terms": [[1.0, 1.5]], "cap": 1.0})

    def _xi(self):
        xi = self.xi
        if isinstance(xi, (int, float)) and not isinstance(xi, bool):
            return float(xi)
        if isinstance(xi, dict) and len(xi) == 1:
            if "const" in xi:
                return float(xi["const"])
            if "nodes" in xi:
                return tuple(float(v) for v in xi["nodes"])
        raise ConfigError('problem.xi must be a number, {"const": c} or {"nodes": [...]}')

    def build(self, p: float) -> ProblemSpec:
        pert = dict(self.f)
        kind = pert.pop("kind", None)
        if kind is None:
            raise ConfigError("problem.f needs a 'kind'")
        if kind == "custom":
            raise ConfigError("custom perturbations are only available from Python")
        if len(self.interval) != 2 or len(self.beta) != 2:
            raise ConfigError("interval and beta need two entries each")
        try:
            return ProblemSpec(tuple(self.interval), self._xi(), tuple(self.beta), PerturbationSpec(kind, pert),
                               float(p))
        except ValueError as exc:
            raise ConfigError(f"problem: {exc}") from None


@dataclass
class CommandConfig:
    name: str = "solve"
    lam: float | None = None
    lambdas: list | None = None
    bracket: list | None = None
    tol_lambda: float = 1e-2
    r: float | None = None
    eigen_tol: float = 1e-10
    with_second: bool = False
    profile: str | None = None
    deltas: list | None = None
    grid: list | None = None
    mountain_pass: dict | None = None

    def mp_params(self) -> MountainPassParams:
        if self.mountain_pass is None:
            return MountainPassParams()
        return _take(MountainPassParams, self.mountain_pass, "command.mountain_pass")


@dataclass
class RunConfig:
    operator: OperatorConfig
    problem: ProblemConfig
    solver: SolverParams
    command: CommandConfig
    output: str = "out"
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        top = {"operator", "problem", "solver", "command", "output"}
        unknown = sorted(set(data) - top)
        if unknown:
            raise ConfigError(f"unknown top-level keys: {unknown}")
        op = _take(OperatorConfig, data.get("operator", {}), "operator")
        pr = _take(ProblemConfig, data.get("problem", {}), "problem")
        try:
            sv = _take(SolverParams, data.get("solver", {}), "solver")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        cmd_data = dict(data.get("command", {}))
        if "lambda" in cmd_data:
            cmd_data["lam"] = cmd_data.pop("lambda")
        cmd = _take(CommandConfig, cmd_data, "command")
        cfg = cls(op, pr, sv, cmd, str(data.get("output", "out")), raw=data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def validate(self):
        if self.command.name not in COMMANDS:
            raise ConfigError(f"unknown command {self.command.name!r}; expected one of {COMMANDS}")
        if any(float(b) < 0 for b in self.problem.beta):
            raise ConfigError(f"Robin weights must be nonnegative, got {self.problem.beta}")
        pp = self.problem.f.get("p")
        if pp is not None and float(pp) != float(self.operator.p):
            raise ConfigError("perturbation p differs from operator p")
        lams = self.command.lambdas
        if lams is not None and any(b <= a for a, b in zip(lams, lams[1:])):
            raise ConfigError("command.lambdas must be strictly ascending")
        br = self.command.bracket
        if br is not None and (len(br) != 2 or not br[0] < br[1]):
            raise ConfigError("command.bracket must be [lo, hi] with lo < hi")
        self.operator_spec()
        self.problem_spec()

    def operator_spec(self) -> OperatorSpec:
        return self.operator.build()

    def problem_spec(self) -> ProblemSpec:
        return self.problem.build(self.operator.p)

    def with_command(self, name: str | None = None, seed: int | None = None) -> "RunConfig":
        cmd = self.command if name is None else CommandConfig(**{**asdict(self.command), "name": name})
        solver = self.solver if seed is None else self.solver.with_(seed=int(seed))
        cfg = RunConfig(self.operator, self.problem, solver, cmd, self.output, self.raw)
        cfg.validate()
        return cfg

    def canonical(self) -> dict:
        """Effective settings, without the output location."""
        return {
            "operator": asdict(self.operator),
            "problem": asdict(self.problem),
            "solver": asdict(self.solver),
            "command": asdict(self.command),
        }

    def sha256(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()
