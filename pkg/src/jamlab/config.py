"""Run configuration: JSON file, unknown keys rejected, every field defaulted.

The link budget is fixed by the synthesis module and is not configurable.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .model import ModelConfig
from .synthesis import JSR_GRID_DB
from .training import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class DataConfig:
    classes: list[str] | None = None  # None = all 21
    jsr_min: float = float(JSR_GRID_DB[0])
    jsr_max: float = float(JSR_GRID_DB[-1])
    jsr_step: float = 2.0
    per_class: int = 100  # train-pool snapshots per (class, JSR)
    test_per_class: int = 0
    val_fraction: float = 0.2
    split_seed: int = 0


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    jobs: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls()
        for name, sub in (("data", DataConfig), ("train", TrainConfig)):
            if name in d:
                setattr(cfg, name, _section(sub, d[name], name))
        if "model" in d:
            try:
                cfg.model = ModelConfig.from_dict(d["model"])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"model: {e}") from None
        if "jobs" in d:
            cfg.jobs = int(d["jobs"])
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def _section(cls, d: dict, name: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{name} must be a mapping")
    unknown = set(d) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    return cls(**d)
