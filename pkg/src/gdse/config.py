"""Run configuration: one JSON document with model, geometry, drive, numerics and output sections."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError

Number = Union[float, str]  # strings allow complex couplings such as "1.3j"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PotentialConfig(_Section):
    Vx: float = 0.8
    V1: float = 10.0
    V2: float = 13.0
    phi: float = 0.8 * math.pi


class ModelConfig(_Section):
    name: Literal["sp-ladder", "hn2d", "ssh"] = "sp-ladder"
    t_s: float = 1.0
    t_p: float = 1.0
    t_sp: float = 1.0
    t_sp_prime: float = 0.5
    gamma: float = Field(0.5, ge=0)
    delta_y: float = 0.0
    ssh: Optional[dict[str, Number]] = None
    potential: PotentialConfig = PotentialConfig()

    @field_validator("ssh")
    @classmethod
    def _ssh_keys(cls, v):
        if v is None:
            return v
        if set(v) != {"tL", "tR", "tLp", "tRp"}:
            raise ValueError("ssh needs exactly tL, tR, tLp, tRp")
        for key, value in v.items():
            try:
                complex(value)
            except ValueError as exc:
                raise ValueError(f"ssh.{key} is not a number: {value!r}") from exc
        return v

    def hopping(self):
        from .lattice import HoppingParams

        return HoppingParams(self.t_s, self.t_p, self.t_sp, self.t_sp_prime, self.gamma, self.delta_y)

    def descriptor(self):
        from . import models

        if self.name == "sp-ladder":
            return models.sp_ladder_descriptor(self.hopping())
        if self.name == "hn2d":
            return models.hn2d_descriptor()
        if self.ssh is None:
            raise ConfigError("model 'ssh' needs an ssh coupling table")
        return models.ssh_descriptor(**{k: complex(v) for k, v in self.ssh.items()})


class GeometryConfig(_Section):
    shape: Literal["square", "rotated", "diamond"] = "square"
    L: int = Field(40, ge=3)
    theta: float = 0.0
    depth: int = Field(2, ge=1)

    def spec(self):
        from .lattice import GeometrySpec

        return GeometrySpec(self.shape, self.L, self.theta)


class DriveConfig(_Section):
    k0: tuple[float, float] = (0.1 * math.pi, 0.0)
    force: tuple[float, float] = (0.0, 0.25)
    duration: Optional[float] = Field(None, gt=0)  # None: one Bloch period
    sigma0: float = Field(4.5, gt=0)
    band: Literal[0, 1] = 0
    sweep_thetas: tuple[float, ...] = (0.0, math.pi / 16, math.pi / 8, 3 * math.pi / 16, math.pi / 4)
    sweep_force: float = Field(0.25, gt=0)
    sweep_k0: tuple[float, float] = (-0.5 * math.pi, 0.0)
    sweep_size: int = Field(25, ge=3)  # square side; rotated sizes scale to the same width


class NumericsConfig(_Section):
    dim_cap: int = Field(14000, gt=0)
    dt: Optional[float] = Field(None, gt=0)
    record_every: int = Field(1, ge=1)
    stripe_L: int = Field(60, ge=4)
    k_minus: tuple[float, ...] = (-0.5 * math.pi, 0.3, 0.5 * math.pi)
    kappa_grid: int = Field(0, ge=0)  # 0 skips the kappa map
    root_tol: float = Field(1e-6, gt=0)
    winding_samples: int = Field(2048, ge=2048)
    bulk_delta: float = Field(0.1, gt=0)
    sweep_dynamics: bool = True
    wannier_window: int = Field(3, ge=1)
    wannier_iterations: int = Field(6, ge=0)
    wannier_spacing: float = Field(2 * math.pi / 128, gt=0)


class OutputConfig(_Section):
    dir: str = "out"


class RunConfig(_Section):
    model: ModelConfig = ModelConfig()
    geometry: GeometryConfig = GeometryConfig()
    drive: DriveConfig = DriveConfig()
    numerics: NumericsConfig = NumericsConfig()
    output: OutputConfig = OutputConfig()

    def resolved(self) -> dict:
        """Every field, defaults included, in JSON-ready form."""
        return self.model_dump(mode="json")

    def digest(self, subcommand: str) -> str:
        blob = json.dumps({"subcommand": subcommand, "config": self.resolved()}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def load_config(path: Optional[str | Path] = None, overrides: Optional[dict] = None) -> RunConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be an object")
    for section, values in (overrides or {}).items():
        data.setdefault(section, {}).update(values)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
