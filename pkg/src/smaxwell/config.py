"""Run configuration for ``smaxwell solve``.

A JSON object with optional sections::

    {"nonlinearity": {...}, "grid": {...}, "inner": {...}, "outer": {...},
     "seed": {"amplitudes": [a0, a1], "radius": R}, "rng_seed": 0, "output": "out"}

Missing sections take their defaults; unknown keys are rejected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .fields import GridSpec
from .inner import InnerConfig
from .nonlinearity import NonlinearityParams
from .outer import OuterConfig
from .seeds import SeedProfile

SECTIONS = ("nonlinearity", "grid", "inner", "outer", "seed", "rng_seed", "output")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: NonlinearityParams = field(default_factory=NonlinearityParams)
    grid: GridSpec = field(default_factory=GridSpec)
    inner: InnerConfig = field(default_factory=InnerConfig)
    outer: OuterConfig = field(default_factory=OuterConfig)
    seed: SeedProfile = field(default_factory=SeedProfile)
    rng_seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.params.n != self.grid.n:
            raise ValueError(f"nonlinearity dimension {self.params.n} differs from grid dimension {self.grid.n}")
        if self.grid.n < 4:
            raise ValueError("the solver needs n >= 4 (V is trivial for n = 2)")
        if not 0.0 < self.seed.radius < self.grid.L:
            raise ValueError(f"seed radius {self.seed.radius} must lie strictly inside the box (L={self.grid.L})")

    def to_dict(self) -> dict:
        return {
            "nonlinearity": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "inner": self.inner.to_dict(),
            "outer": self.outer.to_dict(),
            "seed": self.seed.to_dict(),
            "rng_seed": self.rng_seed,
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            grid = GridSpec(**d.get("grid", {}))
            nl = dict(d.get("nonlinearity", {}))
            nl.setdefault("n", grid.n)
            return cls(
                params=NonlinearityParams.from_dict(nl),
                grid=grid,
                inner=InnerConfig.from_dict(d.get("inner", {})),
                outer=OuterConfig.from_dict(d.get("outer", {})),
                seed=SeedProfile.from_dict(d.get("seed", {})),
                rng_seed=int(d.get("rng_seed", 0)),
                output=d.get("output"),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(raw)
