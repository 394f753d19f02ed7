"""Run configuration: defaults, validation and YAML loading."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .core import HdContourError


class ConfigError(HdContourError, ValueError):
    pass


class ColumnMap(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    time: str = "time"
    hs: str = "hs_m"
    v: str = "v_ms"


class RunConfig(BaseModel):
    """All knobs of a pipeline run. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    input: Optional[str] = None
    columns: ColumnMap = ColumnMap()
    skip_invalid: bool = False
    state_duration_hours: float = Field(1.0, gt=0)

    bandwidth_factor: float = Field(2.0, gt=0)
    bandwidth_exponent: float = Field(-1.0 / 6.0, ge=-1.0, lt=0.0)
    grid_step: Tuple[float, float] = (0.1, 0.1)
    padding_bandwidths: float = Field(4.0, gt=0)
    strict_grid: bool = False

    return_periods: List[float] = Field(default_factory=lambda: [1.0, 50.0, 500.0], min_length=1)
    method: Literal["kde", "cma", "both"] = "both"
    cma_bin_width: float = Field(0.5, gt=0)
    cma_min_bin_count: int = Field(100, ge=2)
    cma_refine: bool = False

    angles: List[float] = Field(default_factory=lambda: [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0], min_length=1)
    frame_normalization: Literal["extent", "std"] = "extent"

    output_dir: str = "out"
    write_density: bool = False
    write_plots: bool = True

    synthetic: bool = False
    synthetic_n: int = Field(100_000, ge=2)
    seed: int = Field(0, ge=0)

    @field_validator("grid_step")
    @classmethod
    def _positive_steps(cls, v):
        if not all(s > 0 for s in v):
            raise ValueError("grid steps must be positive")
        return v

    @field_validator("return_periods")
    @classmethod
    def _positive_periods(cls, v):
        if not all(t > 0 for t in v):
            raise ValueError("return periods must be positive")
        if len(set(v)) != len(v):
            raise ValueError("return periods must be distinct")
        return v

    @field_validator("angles")
    @classmethod
    def _quadrant(cls, v):
        if not all(0.0 <= a <= 90.0 for a in v):
            raise ValueError("angles must lie in [0, 90] degrees")
        return v

    @property
    def methods(self) -> tuple:
        return ("kde", "cma") if self.method == "both" else (self.method,)

    def digest(self) -> str:
        """SHA-256 of the settings that influence numeric output."""
        payload = self.model_dump(mode="json", exclude={"output_dir", "write_plots", "write_density"})
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def make_config(**values) -> RunConfig:
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    """Read a YAML mapping, apply ``overrides`` and validate."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a key-value mapping")
    data.update(overrides or {})
    return make_config(**data)
