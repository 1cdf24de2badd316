"""Flat key-value experiment configuration files.

Grammar, one statement per line::

    # comment            (also allowed after a value)
    key = value          keys are case-insensitive; '-' and '_' are equivalent
    include other.conf   path relative to the including file

Values are parsed as int, float, bool (true/false), comma-separated lists of
those, or left as strings. Later assignments override earlier ones, so an
included file can be overridden by lines after the include.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

EXPERIMENTS = (
    "gauss-known-known",
    "gauss-unknown-known",
    "gauss-known-mean",
    "gauss-sweep",
    "gauss-correction",
    "rate-check",
    "toy-dp-logreg",
    "toy-sweep",
    "coverage-study",
)

CORE_KEYS = ("experiment", "seed", "m", "n_x", "c", "k", "repetitions")
PRIVACY_KEYS = ("epsilon", "delta", "sensitivity")


class ConfigError(ValueError):
    pass


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_scalar(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_value(text: str):
    if "," in text:
        return [parse_scalar(part) for part in text.split(",") if part.strip()]
    return parse_scalar(text)


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value) + ("," if len(value) == 1 else "")
    return str(value)


def read_config_file(path, _seen: frozenset = frozenset()) -> dict[str, Any]:
    path = Path(path).resolve()
    if path in _seen:
        raise ConfigError(f"include cycle at {path}")
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("include ") or line.startswith("include\t"):
            target = Path(line.split(None, 1)[1].strip())
            if not target.is_absolute():
                target = path.parent / target
            values.update(read_config_file(target, _seen | {path}))
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        if not key.strip():
            raise ConfigError(f"{path}:{lineno}: empty key")
        values[normalize_key(key)] = parse_value(value)
    return values


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    m: int | None = None
    n_x: int | None = None
    c: float | None = None
    k: int | None = None
    repetitions: int | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.experiment = str(self.experiment).strip()
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; valid names: {', '.join(EXPERIMENTS)}")
        self.seed = int(self.seed)
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        for name in ("m", "n_x", "k", "repetitions"):
            value = getattr(self, name)
            if value is not None:
                if int(value) != value or value < 1:
                    raise ConfigError(f"{name} must be a positive integer")
                setattr(self, name, int(value))
        if self.c is not None and not self.c > 0:
            raise ConfigError("c must be positive")
        self.params = {normalize_key(k): v for k, v in self.params.items()}

    @classmethod
    def from_dict(cls, values: dict[str, Any]) -> "ExperimentConfig":
        values = {normalize_key(k): v for k, v in values.items()}
        if "experiment" not in values:
            raise ConfigError("config must set 'experiment'")
        core = {k: values.pop(k) for k in CORE_KEYS if k in values}
        nested = values.pop("params", None)
        if isinstance(nested, dict):
            values.update(nested)
        return cls(**core, params=values)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(read_config_file(path))

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        values = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                if "=" not in line:
                    raise ConfigError(f"expected 'key = value', got {line!r}")
                key, value = line.split("=", 1)
                values[normalize_key(key)] = parse_value(value)
        return cls.from_dict(values)

    def to_dict(self) -> dict[str, Any]:
        out = {"experiment": self.experiment, "seed": self.seed}
        for name in CORE_KEYS[2:]:
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        out.update(self.params)
        return out

    def to_text(self) -> str:
        return "\n".join(f"{k} = {format_value(v)}" for k, v in self.to_dict().items()) + "\n"

    def get(self, key: str, default=None):
        return self.params.get(normalize_key(key), default)

    def resolved(self, defaults: dict[str, Any]) -> "ExperimentConfig":
        """Copy with every unset field filled from ``defaults``."""
        merged = dict(defaults)
        merged.update(self.to_dict())
        return ExperimentConfig.from_dict(merged)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
