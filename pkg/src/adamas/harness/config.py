"""Workload and sweep configuration, parsed from JSON with pydantic."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError
from ..hadamard import is_power_of_two

DEFAULT_BUDGETS = [16, 32, 64, 128, 256, 512, 1024, 2048, 4096]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Gaussian(_Model):
    kind: Literal["gaussian"] = "gaussian"


class GaussianWithOutliers(_Model):
    kind: Literal["gaussian_with_outliers"] = "gaussian_with_outliers"
    outlier_frac: float = Field(0.01, ge=0.0, le=1.0)
    outlier_scale: float = Field(10.0, gt=0.0)
    # "element": each entry independently; "channel": whole head dimensions
    outlier_mode: Literal["element", "channel"] = "element"


class PlantedNeedle(_Model):
    kind: Literal["planted_needle"] = "planted_needle"
    position: int = Field(..., ge=0)
    snr: float = Field(10.0, gt=0.0)


Distribution = Annotated[Union[Gaussian, GaussianWithOutliers, PlantedNeedle], Field(discriminator="kind")]


class WorkloadSpec(_Model):
    seed: int = Field(0, ge=0, lt=2**64)
    seq_len: int = Field(..., ge=1)
    head_dim: int = 128
    distribution: Distribution = Field(default_factory=Gaussian)
    num_queries: int = Field(1, ge=1)

    @field_validator("head_dim")
    @classmethod
    def _pow2(cls, v):
        if v < 2 or not is_power_of_two(v):
            raise ValueError("head_dim must be a power of two >= 2")
        return v

    @model_validator(mode="after")
    def _needle_in_range(self):
        if isinstance(self.distribution, PlantedNeedle) and self.distribution.position >= self.seq_len:
            raise ValueError(f"needle position {self.distribution.position} outside seq_len {self.seq_len}")
        return self


class AdamasPolicy(_Model):
    kind: Literal["adamas"] = "adamas"
    bits: Literal[1, 2, 3] = 2
    metric: Literal["L1", "L2"] = "L1"
    with_hadamard: bool = True

    @property
    def label(self) -> str:
        tail = "" if self.with_hadamard else "-nohadamard"
        return f"adamas-{self.bits}bit-{self.metric}{tail}"


class WindowPolicySpec(_Model):
    kind: Literal["window"] = "window"
    sink: int = Field(4, ge=0)

    @property
    def label(self) -> str:
        return f"window-sink{self.sink}"


class QuestPolicy(_Model):
    kind: Literal["quest"] = "quest"
    page_size: int = Field(16, ge=1)
    include_current_page: bool = False

    @property
    def label(self) -> str:
        return f"quest-p{self.page_size}" + ("-current" if self.include_current_page else "")


class OraclePolicy(_Model):
    kind: Literal["oracle"] = "oracle"

    @property
    def label(self) -> str:
        return "oracle"


Policy = Annotated[Union[AdamasPolicy, WindowPolicySpec, QuestPolicy, OraclePolicy], Field(discriminator="kind")]


class SweepConfig(_Model):
    budgets: list[int] = Field(default_factory=lambda: list(DEFAULT_BUDGETS))
    policies: list[Policy]
    metrics: list[Literal["recall", "output_error"]] = Field(default_factory=lambda: ["recall", "output_error"])

    @field_validator("budgets")
    @classmethod
    def _ascending(cls, v):
        if not v or any(b < 1 for b in v) or any(b2 <= b1 for b1, b2 in zip(v, v[1:])):
            raise ValueError("budgets must be positive and strictly ascending")
        return v

    @model_validator(mode="after")
    def _unique_labels(self):
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate policies: {labels}")
        if not labels:
            raise ValueError("at least one policy is required")
        return self


class RunConfig(_Model):
    """Config file layout: ``{"workload": {...}, "sweep": {...}}``.

    ``workload.seed`` may also be a list, which runs the sweep once per seed.
    """

    workload: dict
    sweep: SweepConfig

    def workloads(self) -> list[WorkloadSpec]:
        raw = dict(self.workload)
        seeds = raw.pop("seed", 0)
        if isinstance(seeds, int):
            seeds = [seeds]
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError("workload.seed must be an integer or a non-empty list of integers")
        try:
            return [WorkloadSpec(seed=s, **raw) for s in seeds]
        except ValidationError as exc:
            raise ConfigError(_describe(exc)) from None


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"])
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> tuple[list[WorkloadSpec], SweepConfig]:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None
    return cfg.workloads(), cfg.sweep


def load_config(path) -> tuple[list[WorkloadSpec], SweepConfig]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(data)
