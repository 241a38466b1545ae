"""Flat ``key = value`` experiment configs with a canonical hash.

A config file is plain text, one ``key = value`` per line, ``#`` starts a
comment. Lists are comma separated. Keys are the fields of
:class:`ExperimentConfig`; unknown keys are rejected so typos fail loudly.

The hash is the first 16 hex digits of SHA-256 over :func:`canonical_text`,
which lists every field sorted by key with normalised values, so two configs
that differ only in layout or comments hash the same.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

HASH_LEN = 16

ALGORITHMS = (
    "dqn-lite", "c51-lite", "s51-lite-cdf", "s51-lite-pmf",
    "q-learning", "sarsa", "tabular-cdf", "tabular-pmf", "tabular-mixture",
)
TABULAR_ALGORITHMS = ALGORITHMS[4:]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def canonical_text(mapping: Mapping[str, Any]) -> str:
    """Sorted ``key = value`` lines with normalised number formatting."""
    return "".join(f"{k} = {_fmt(mapping[k])}\n" for k in sorted(mapping))


def config_hash(mapping: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_text(mapping).encode()).hexdigest()[:HASH_LEN]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a ``run``.

    ``features`` is ``fourier`` (order ``fourier_order``), ``mlp`` (raw
    observations into ``hidden`` ReLU layers) or ``tabular``. Step sizes:
    ``lr`` for the lite agents, ``alpha`` for tabular rules (the CDF-gradient
    rule uses ``alpha / (2c)``); ``sweep_lr`` lists step sizes for ``sweep``
    and applies to whichever of the two the algorithm uses. Tabular runs start
    every value at ``q_init`` and use the environment's own discount.
    ``clock = off`` writes 0 in the wall-clock column so reruns are
    byte-identical. With ``early_stop = on`` a seed stops once its trailing
    ``stop_window``-episode mean return reaches ``stop_return``.
    """

    name: str = "experiment"
    env: str = "cartpole"
    algorithms: tuple[str, ...] = ("dqn-lite",)
    features: str = "fourier"
    fourier_order: int = 4
    hidden: tuple[int, ...] = (64, 64)
    optimizer: str = "adam"
    lr: float = 1e-3
    sweep_lr: tuple[float, ...] = ()
    alpha: float = 0.1
    q_init: float = 0.0
    epsilon: float = 0.1
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    gamma: float = 0.99
    n_atoms: int = 51
    v_min: float = -100.0
    v_max: float = 100.0
    init: str = "matched"
    dtype: str = "float32"
    batch_size: int = 128
    capacity: int = 50_000
    sync_period: int = 10
    seeds: tuple[int, ...] = (0,)
    episodes: int = 100
    early_stop: str = "off"
    stop_return: float = 195.0
    stop_window: int = 100
    clock: str = "off"

    def __post_init__(self):
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if self.features not in ("fourier", "mlp", "tabular"):
            raise ConfigError(f"unknown features {self.features!r}")
        if self.features == "fourier" and self.fourier_order < 1:
            raise ConfigError("fourier_order must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.init not in ("matched", "unconstrained"):
            raise ConfigError(f"unknown init {self.init!r}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"unknown dtype {self.dtype!r}")
        if self.clock not in ("on", "off"):
            raise ConfigError("clock must be on or off")
        if self.early_stop not in ("on", "off") or self.stop_window < 1:
            raise ConfigError("early_stop must be on or off, with stop_window >= 1")
        if self.episodes < 1 or not self.seeds:
            raise ConfigError("need episodes >= 1 and at least one seed")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1)")
        if self.n_atoms < 2 or self.v_max <= self.v_min:
            raise ConfigError("support needs n_atoms >= 2 and v_max > v_min")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    def dumps(self) -> str:
        return f"# config_hash = {self.hash}\n" + canonical_text(self.to_dict())

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, mapping: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(known[key], raw)
        return cls(**kwargs)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(parse_flat(text))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())


def parse_flat(text: str) -> dict[str, str]:
    """``key = value`` lines to a dict of raw strings."""
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {n}: empty key")
        if key in out:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        out[key] = value
    return out


_SCALARS = {"int": int, "float": float, "str": str}


def _coerce(f: dataclasses.Field, raw: Any) -> Any:
    """Convert a raw value (string or Python object) to the field's type."""
    type_name = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    try:
        if type_name.startswith("tuple["):
            inner = _SCALARS[type_name[len("tuple["):].split(",")[0].strip("] ")]
            if isinstance(raw, str):
                items = [s.strip() for s in raw.split(",") if s.strip()]
            else:
                items = list(raw) if isinstance(raw, (list, tuple)) else [raw]
            return tuple(_scalar(inner, v) for v in items)
        return _scalar(_SCALARS[type_name], raw)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad value for {f.name}: {raw!r}") from exc


def _scalar(kind, v):
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            raise ValueError(v)
        return int(float(v)) if isinstance(v, str) and ("e" in v.lower()) else int(v)
    return kind(v)


__all__ = ["ALGORITHMS", "ConfigError", "ExperimentConfig", "TABULAR_ALGORITHMS", "canonical_text",
           "config_hash", "parse_flat"]
