"""Run configuration: YAML file plus command-line overrides, validated by pydantic."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, \
    model_validator

from .errors import ConfigError
from .numerics import QuadratureSpec
from .scattering import CombModel
from .vacuum import ContourSpec

__all__ = [
    "COMMANDS",
    "ModelConfig",
    "ContourConfig",
    "SweepConfig",
    "OutputConfig",
    "RunConfig",
    "parse_range",
    "parse_config",
    "load_config_file",
]

COMMANDS = ("bands", "casimir", "free-energy", "entropy", "pressure", "sweep", "verify")
QUANTITIES = ("casimir", "free-energy", "entropy", "pressure")


def parse_range(text: str) -> list[float]:
    """``start:stop:count`` (inclusive, evenly spaced) or a single number."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(f"expected a number or start:stop:count, got {text!r}") from None
    if count < 1:
        raise ValueError(f"count must be at least 1 in {text!r}")
    return [float(x) for x in np.linspace(start, stop, count)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _as_list(value):
    if value is None:
        return None
    if isinstance(value, str):
        return parse_range(value)
    if isinstance(value, (int, float)):
        return [float(value)]
    return value


class ModelConfig(_Strict):
    kind: Literal["ddp", "pt", "free"]
    a: float = Field(1.0, gt=0)
    w0: float = 0.0
    w1: float = 0.0
    eps: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "pt":
            if self.eps is None:
                raise ValueError("the pt model needs eps")
            if self.eps > self.a:
                raise ValueError(f"eps={self.eps} exceeds the lattice spacing a={self.a}; "
                                 "the potential must fit inside the unit cell")
        return self

    def build(self, a: float | None = None, w0: float | None = None,
              w1: float | None = None, eps: float | None = None) -> CombModel:
        a = self.a if a is None else a
        if self.kind == "free":
            return CombModel.free(a)
        if self.kind == "ddp":
            return CombModel.dirac(self.w0 if w0 is None else w0,
                                   self.w1 if w1 is None else w1, a)
        return CombModel.poschl_teller(self.eps if eps is None else eps, a)


class ContourConfig(_Strict):
    gamma: float = math.pi / 8
    rel_tol: float = Field(1e-8, gt=0)
    abs_tol: float = Field(1e-14, gt=0)
    max_subdivisions: int = Field(2000, ge=10)
    theta_nodes: int = Field(64, ge=2)
    theta_mode: Literal["analytic", "quadrature"] = "analytic"

    @field_validator("gamma")
    @classmethod
    def _gamma(cls, v):
        if not 0 < v < math.pi / 4:
            raise ValueError(f"gamma must lie in (0, pi/4), got {v}")
        return v

    def build(self) -> ContourSpec:
        quad = QuadratureSpec(self.rel_tol, self.abs_tol, self.max_subdivisions)
        return ContourSpec(gamma_angle=self.gamma, xi_cutoff_policy=self.abs_tol, quad=quad,
                           theta_nodes=self.theta_nodes, theta_mode=self.theta_mode)


class SweepConfig(_Strict):
    quantity: Literal["casimir", "free-energy", "entropy", "pressure"] = "free-energy"
    T: Optional[list[float]] = None
    a: Optional[list[float]] = None
    w0: Optional[list[float]] = None
    w1: Optional[list[float]] = None
    eps: Optional[list[float]] = None

    @field_validator("T", "a", "w0", "w1", "eps", mode="before")
    @classmethod
    def _ranges(cls, v):
        return _as_list(v)

    @field_validator("T", "a", "w0", "w1", "eps")
    @classmethod
    def _nonempty(cls, v):
        if v is not None and len(v) == 0:
            raise ValueError("sweep axes must be nonempty")
        return v


class OutputConfig(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class RunConfig(_Strict):
    command: Literal["bands", "casimir", "free-energy", "entropy", "pressure", "sweep",
                     "verify"]
    model: ModelConfig
    contour: ContourConfig = ContourConfig()
    sweep: SweepConfig = SweepConfig()
    output: OutputConfig = OutputConfig()
    n_bands: int = Field(3, ge=1)
    n_theta: int = Field(65, ge=2)
    include_vacuum_part: bool = False

    @model_validator(mode="after")
    def _check(self):
        m = self.model
        if m.kind == "ddp" and abs(abs(m.w1) - 1) < 1e-14 and self.command != "casimir":
            raise ValueError(
                "w1 = +-1 makes Omega = (w1^2-1)/(w1^2+1) vanish: t is identically zero, the "
                "nodes are opaque and the Bloch discriminant h_V = (...)/(2t) is undefined. "
                "Only the casimir command supports this case.")
        if self.command == "sweep":
            s = self.sweep
            if not any(getattr(s, axis) for axis in ("T", "a", "w0", "w1", "eps")):
                raise ValueError("sweep needs at least one nonempty axis")
            if s.quantity != "casimir" and not s.T:
                raise ValueError(f"sweeping {s.quantity} needs a T axis")
        if self.command in ("free-energy", "entropy", "pressure") and not self.sweep.T:
            raise ValueError(f"{self.command} needs temperatures (--T or --T-sweep)")
        return self

    def temperatures(self) -> list[float]:
        return list(self.sweep.T or [])

    def spacings(self) -> list[float]:
        return list(self.sweep.a or [self.model.a])


def _line_index(text: str) -> dict[tuple, int]:
    """Map key paths of a YAML mapping to 1-based line numbers."""
    index: dict[tuple, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return index

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                p = path + (key.value,)
                index[p] = key.start_mark.line + 1
                walk(value, p)

    walk(root, ())
    return index


def load_config_file(path: str | Path) -> tuple[dict, dict]:
    """Read a YAML config; return the raw mapping and its key-path line index."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"cannot parse {path}: {exc}", file=str(path),
                          line=None if mark is None else mark.line + 1) from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at the top level", file=str(path))
    return data, _line_index(text)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def parse_config(file: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from an optional YAML file and flag overrides.

    Raises
    ------
    ConfigError
        With the offending field path and, when it came from the file, its line.
    """
    data, lines = ({}, {}) if file is None else load_config_file(file)
    data = _merge(data, overrides or {})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(str(p) for p in err["loc"])
        line = None
        for n in range(len(loc), 0, -1):
            if loc[:n] in lines:
                line = lines[loc[:n]]
                break
        where = ".".join(loc) or "<root>"
        message = f"invalid config field {where}: {err['msg']}"
        if line is not None:
            message += f" (line {line} of {file})"
        raise ConfigError(message, field=where, line=line,
                          file=None if file is None else str(file)) from None
