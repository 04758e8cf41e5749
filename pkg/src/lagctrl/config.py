"""Run configuration: TOML file + dotted overrides -> validated dataclasses.

Sections mirror the pipeline: [gas], [problem], [numerics], [output].  Every
field has a documented default (see DEFAULTS); validation failures name the
offending section and field.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .control import ControlProblem
from .pde import GasModel


class ConfigError(ValueError):
    """Configuration rejected; message names the offending field."""


@dataclass(frozen=True)
class Numerics:
    """Solver knobs; defaults sized for the desk-scale fixture."""

    M: int = 1024  # cells
    cfl: float = 0.5  # advective CFL factor, rechecked every step
    u_headroom: float = 0.1  # |u| allowance baked into dt
    nmax: int = 2048  # series truncation
    accel: bool = True  # closed-form tail layer
    quad_panels: int = 16  # Gauss-Legendre panels per axis
    quad_nodes: int = 8  # nodes per panel
    tol_pos: float = 1e-6  # shooting residual tolerance (position units)
    max_iter: int = 25
    rho_floor: float = 0.1  # vacuum guard
    substeps: int = 1  # RK4 substeps per snapshot interval
    seed: int = 12345
    degeneracy_rtol: float = 1e-12
    trig_tuples: int = 1000  # random tuples per dimension in the trig battery
    trig_dmax: int = 6
    threads: int = 1

    def __post_init__(self):
        if self.M < 8:
            raise ValueError(f"M must be >= 8, got {self.M}")
        if not (0 < self.cfl <= 1):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.nmax < 1:
            raise ValueError(f"nmax must be >= 1, got {self.nmax}")
        if self.quad_panels < 1 or self.quad_nodes < 1:
            raise ValueError("quad_panels and quad_nodes must be >= 1")
        if self.tol_pos <= 0:
            raise ValueError(f"tol_pos must be positive, got {self.tol_pos}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("json", "csv", "lcns")

    def __post_init__(self):
        known = {"json", "csv", "lcns"}
        bad = set(self.formats) - known
        if bad:
            raise ValueError(f"unknown output formats {sorted(bad)}; choose from {sorted(known)}")


@dataclass(frozen=True)
class RunConfig:
    gas: GasModel
    problem: ControlProblem
    numerics: Numerics
    output: OutputConfig

    def resolved(self) -> dict:
        """Flat dict of every resolved field, for --dry-run and reports."""
        return {
            "gas": dataclasses.asdict(self.gas),
            "problem": {
                "alphas": list(self.problem.alphas),
                "betas": list(self.problem.betas),
                "T": self.problem.T,
                "omega": list(self.problem.omega),
                "eta": self.problem.eta,
            },
            "numerics": dataclasses.asdict(self.numerics),
            "output": {
                "directory": self.output.directory,
                "formats": list(self.output.formats),
            },
        }


DEFAULTS = {
    "gas": {"c": 1.3, "gamma": 1.4},
    "problem": {
        "alphas": [0.3, 0.6],
        "betas": [0.3007, 0.6011],
        "T": 2.0,
        "omega": [1.5, 2.5],
        "eta": 0.1,
    },
    "numerics": {f.name: f.default for f in dataclasses.fields(Numerics)},
    "output": {"directory": "out", "formats": ["json", "csv", "lcns"]},
}


def _parse_override(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise ConfigError(f"override '{text}' must look like section.field=value")
    try:
        parsed = tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value  # bare string
    return key.strip(), parsed


def _merge(base: dict, extra: dict, where: str):
    for key, value in extra.items():
        if key not in base:
            raise ConfigError(f"unknown field '{where}.{key}'")
        base[key] = value


def load_config(path=None, overrides=()) -> RunConfig:
    """Build a validated RunConfig from defaults, a TOML file, and overrides."""
    sections = {k: dict(v) for k, v in DEFAULTS.items()}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}")
        for name, content in data.items():
            if name not in sections:
                raise ConfigError(f"unknown section [{name}]")
            if not isinstance(content, dict):
                raise ConfigError(f"section [{name}] must be a table")
            _merge(sections[name], content, name)
    for text in overrides:
        key, value = _parse_override(text)
        section, dot, fieldname = key.partition(".")
        if not dot or section not in sections:
            raise ConfigError(f"override key '{key}' must be section.field")
        _merge(sections[section], {fieldname: value}, section)

    def build(cls, name, **extra):
        try:
            return cls(**sections[name], **extra)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}] {exc}")

    prob = sections["problem"]
    try:
        problem = ControlProblem(
            alphas=tuple(prob["alphas"]),
            betas=tuple(prob["betas"]),
            T=float(prob["T"]),
            omega=tuple(prob["omega"]),
            eta=float(prob["eta"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[problem] {exc}")
    out = sections["output"]
    try:
        output = OutputConfig(directory=str(out["directory"]), formats=tuple(out["formats"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[output] {exc}")
    return RunConfig(
        gas=build(GasModel, "gas"),
        problem=problem,
        numerics=build(Numerics, "numerics"),
        output=output,
    )
