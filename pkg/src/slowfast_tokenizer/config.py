"""Aggregate pipeline configuration, loadable from a strict JSON file.

Unknown keys are rejected so typos fail loudly instead of silently falling
back to defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping

from .budget import GeometryConfig
from .errors import InvalidConfigError
from .frames import DEFAULT_GRID_SIDE, DEFAULT_PER_PATCH_TOL, DEFAULT_SLOW_THRESHOLD
from .layout import DEFAULT_FAST_FRAME_TOKEN, DEFAULT_SLOW_FRAME_TOKEN
from .packing import (
    DEFAULT_COST_ALPHA,
    DEFAULT_COST_BETA,
    DEFAULT_MIXTURE_FRACTIONS,
    Modality,
)
from .rope import DEFAULT_INV_FREQ_BASE


@dataclass(frozen=True)
class SimilarityConfig:
    grid_side: int = DEFAULT_GRID_SIDE
    per_patch_tol: float = DEFAULT_PER_PATCH_TOL
    threshold: float = DEFAULT_SLOW_THRESHOLD

    def __post_init__(self):
        if self.grid_side < 1:
            raise InvalidConfigError(f"grid_side must be >= 1, got {self.grid_side}")
        if not (math.isfinite(self.per_patch_tol) and self.per_patch_tol >= 0):
            raise InvalidConfigError(
                f"per_patch_tol must be finite and >= 0, got {self.per_patch_tol!r}"
            )
        if not (math.isfinite(self.threshold) and 0 <= self.threshold <= 1):
            raise InvalidConfigError(
                f"threshold must lie in [0, 1], got {self.threshold!r}"
            )


@dataclass(frozen=True)
class RopeSettings:
    """Index-table and frequency settings for the unified 3D rotary scheme."""

    inv_freq_base: float = DEFAULT_INV_FREQ_BASE
    temporal_unit_s: float = 1.0
    axis_split: tuple[int, ...] = (16, 24, 24)

    def __post_init__(self):
        object.__setattr__(self, "axis_split", tuple(self.axis_split))
        if not (math.isfinite(self.inv_freq_base) and self.inv_freq_base > 1):
            raise InvalidConfigError(
                f"inv_freq_base must be > 1, got {self.inv_freq_base!r}"
            )
        if not (math.isfinite(self.temporal_unit_s) and self.temporal_unit_s > 0):
            raise InvalidConfigError(
                f"temporal_unit_s must be positive, got {self.temporal_unit_s!r}"
            )
        if not self.axis_split or any(
            not isinstance(p, int) or p < 1 for p in self.axis_split
        ):
            raise InvalidConfigError(
                f"axis_split must be positive integers, got {self.axis_split!r}"
            )


@dataclass(frozen=True)
class PackingConfig:
    capacity: int = 8_192
    fractions: Mapping[Modality, float] = field(
        default_factory=lambda: dict(DEFAULT_MIXTURE_FRACTIONS)
    )
    cost_alpha: float = DEFAULT_COST_ALPHA
    cost_beta: float = DEFAULT_COST_BETA

    def __post_init__(self):
        if self.capacity < 1:
            raise InvalidConfigError(f"capacity must be >= 1, got {self.capacity}")
        if not (math.isfinite(self.cost_alpha) and self.cost_alpha >= 0):
            raise InvalidConfigError(
                f"cost_alpha must be finite and >= 0, got {self.cost_alpha!r}"
            )
        if not (math.isfinite(self.cost_beta) and self.cost_beta >= 0):
            raise InvalidConfigError(
                f"cost_beta must be finite and >= 0, got {self.cost_beta!r}"
            )


@dataclass(frozen=True)
class SpecialTokens:
    slow_frame: str = DEFAULT_SLOW_FRAME_TOKEN
    fast_frame: str = DEFAULT_FAST_FRAME_TOKEN

    def __post_init__(self):
        if not self.slow_frame or not self.fast_frame:
            raise InvalidConfigError("special token names must be non-empty")
        if self.slow_frame == self.fast_frame:
            raise InvalidConfigError(
                "slow and fast boundary tokens must be distinct"
            )


def _checked_kwargs(section: Mapping, cls, where: str) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise InvalidConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    return dict(section)


@dataclass(frozen=True)
class PipelineConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    rope: RopeSettings = field(default_factory=RopeSettings)
    packing: PackingConfig = field(default_factory=PackingConfig)
    special_tokens: SpecialTokens = field(default_factory=SpecialTokens)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PipelineConfig":
        sections = {
            "geometry": GeometryConfig,
            "similarity": SimilarityConfig,
            "rope": RopeSettings,
            "packing": PackingConfig,
            "special_tokens": SpecialTokens,
        }
        unknown = sorted(set(data) - set(sections))
        if unknown:
            raise InvalidConfigError(
                f"unknown config section(s): {', '.join(unknown)}"
            )
        built = {}
        for name, section_cls in sections.items():
            section = data.get(name, {})
            if not isinstance(section, Mapping):
                raise InvalidConfigError(f"config section {name!r} must be an object")
            kwargs = _checked_kwargs(section, section_cls, name)
            if name == "rope" and "axis_split" in kwargs:
                kwargs["axis_split"] = tuple(kwargs["axis_split"])
            if name == "packing" and "fractions" in kwargs:
                kwargs["fractions"] = _parse_fractions(kwargs["fractions"])
            built[name] = section_cls(**kwargs)
        return cls(**built)

    @classmethod
    def load(cls, path: Path | str) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidConfigError(f"config file {path}: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidConfigError(f"config file {path} must hold a JSON object")
        return cls.from_dict(data)


def _parse_fractions(raw: Mapping) -> dict[Modality, float]:
    names = {m.value: m for m in Modality}
    out: dict[Modality, float] = {}
    for key, value in raw.items():
        if key not in names:
            raise InvalidConfigError(
                f"unknown modality {key!r} in packing fractions "
                f"(expected one of {sorted(names)})"
            )
        out[names[key]] = float(value)
    if not out:
        raise InvalidConfigError("packing fractions must name at least one modality")
    return out
