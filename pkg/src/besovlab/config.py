"""Experiment configuration: one JSON document with a versioned schema."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1
_SECTIONS = ("grid", "fluid", "solver", "indices", "options")
_TOP_KEYS = {"schema_version", "preset", "seed", "out", *_SECTIONS}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """A preset id plus per-section overrides of the preset defaults.

    Sections: ``grid`` (d, n, L), ``fluid`` (FluidParams fields), ``solver``
    (SolverConfig fields), ``indices`` (p, epsilon) and free-form
    ``options`` interpreted by the preset.
    """

    preset: str
    seed: int = 0
    out: str = "runs"
    grid: dict = field(default_factory=dict)
    fluid: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    indices: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}; allowed: {sorted(_TOP_KEYS)}")
        version = raw.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version {version} not supported (expected {SCHEMA_VERSION})")
        if "preset" not in raw:
            raise ConfigError("configuration needs a 'preset'")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")
        for key in _SECTIONS:
            if not isinstance(raw.get(key, {}), dict):
                raise ConfigError(f"section {key!r} must be an object")
        return cls(
            preset=str(raw["preset"]),
            seed=seed,
            out=str(raw.get("out", "runs")),
            **{k: dict(raw.get(k, {})) for k in _SECTIONS},
        )

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **dataclasses.asdict(self)}

    def with_overrides(self, seed: int | None = None, out: str | None = None, preset: str | None = None) -> "ExperimentConfig":
        changes = {k: v for k, v in (("seed", seed), ("out", out), ("preset", preset)) if v is not None}
        return dataclasses.replace(self, **changes)


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(raw)
