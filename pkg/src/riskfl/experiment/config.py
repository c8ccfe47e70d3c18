"""Experiment configuration and the flat ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import ConfigError

VARIANTS = ("alg1", "ucb", "fedsgd_full", "fedsgd_partial", "centralized")
DEFAULT_DELTAS = (0.6, 0.7, 0.8, 0.9, 0.95, 0.97, 0.99)


@dataclass(frozen=True)
class ExperimentConfig:
    # data
    dataset: str = "synthetic"  # synthetic | mnist
    n_samples: int = 5000
    n_features: int = 20
    n_classes: int = 10
    class_sep: float = 8.0
    mnist_images: str = ""
    mnist_labels: str = ""
    partition: str = "iid"  # iid | noniid
    shards_per_device: int = 2
    test_fraction: float = 0.2
    server_val_fraction: float = 0.1
    device_val_fraction: float = 0.2
    # model and local training
    arch: str = "linear"  # linear | mlp
    hidden: int = 64
    eta: float = 0.001
    batch_size: int = 30
    local_epochs: int = 1
    # federation
    n_devices: int = 50
    budget: int = 3
    rounds: int = 100
    partial_fraction: float = 0.6
    aggregate_norm: str = "participants"  # participants | global
    variant: str = "alg1"
    # selection and risk
    theta: float = 0.9
    explore_prob: float = 0.1
    eps_max: float = 1.0
    improve_eps: float = 0.001
    shapley_permutations: int = 2000
    # participation
    delta: float = 0.9
    device_deltas: tuple[float, ...] = ()
    deltas: tuple[float, ...] = DEFAULT_DELTAS
    gamma: float = 2.0
    lam: float = 1.0
    permanent_dropout: bool = False
    # execution
    seed: int = 0
    workers: int = 1
    target_accuracy: float = 0.8
    links_window: int = 10

    def __post_init__(self):
        validate(self)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def delta_for(self, device: int) -> float:
        return self.device_deltas[device] if self.device_deltas else self.delta


def validate(cfg: ExperimentConfig) -> None:
    def need(ok: bool, msg: str) -> None:
        if not ok:
            raise ConfigError(msg)

    need(cfg.variant in VARIANTS, f"unknown variant {cfg.variant!r}; choose from {', '.join(VARIANTS)}")
    need(cfg.dataset in ("synthetic", "mnist"), f"unknown dataset {cfg.dataset!r}")
    if cfg.dataset == "mnist":
        need(bool(cfg.mnist_images and cfg.mnist_labels), "mnist dataset needs image and label paths")
    need(cfg.partition in ("iid", "noniid"), f"unknown partition {cfg.partition!r}")
    need(cfg.arch in ("linear", "mlp"), f"unknown arch {cfg.arch!r}")
    need(cfg.aggregate_norm in ("participants", "global"), f"unknown aggregate_norm {cfg.aggregate_norm!r}")
    need(cfg.n_devices >= 1, "n_devices must be >= 1")
    need(1 <= cfg.budget <= cfg.n_devices, "budget must satisfy 1 <= budget <= n_devices")
    need(cfg.rounds >= 1, "rounds must be >= 1")
    need(cfg.eta >= 0, "eta must be non-negative")
    need(cfg.batch_size >= 1 and cfg.local_epochs >= 1, "batch_size and local_epochs must be >= 1")
    need(0 < cfg.theta <= 1, "theta must be in (0, 1]")
    need(0 <= cfg.explore_prob <= 1, "explore_prob must be in [0, 1]")
    need(cfg.eps_max > 0, "eps_max must be positive")
    need(0 <= cfg.improve_eps <= 1, "improve_eps must be in [0, 1]")
    need(0 < cfg.partial_fraction <= 1, "partial_fraction must be in (0, 1]")
    need(0 <= cfg.delta <= 1, "delta must be in [0, 1]")
    need(all(0 <= d <= 1 for d in cfg.deltas), "sweep deltas must be in [0, 1]")
    need(bool(cfg.deltas), "sweep needs at least one delta")
    if cfg.device_deltas:
        need(len(cfg.device_deltas) == cfg.n_devices, "device_deltas needs one value per device")
        need(all(0 <= d <= 1 for d in cfg.device_deltas), "device_deltas must be in [0, 1]")
    need(cfg.gamma > 0 and cfg.lam >= 0, "need gamma > 0 and lam >= 0")
    need(cfg.shapley_permutations >= 1, "shapley_permutations must be >= 1")
    need(cfg.workers >= 1, "workers must be >= 1")
    need(0 <= cfg.seed < 1 << 64, "seed must be an unsigned 64-bit integer")
    need(0 < cfg.target_accuracy < 1, "target_accuracy must be in (0, 1)")
    need(cfg.links_window >= 1, "links_window must be >= 1")
    for name in ("test_fraction", "server_val_fraction", "device_val_fraction"):
        need(0 < getattr(cfg, name) < 1, f"{name} must be in (0, 1)")


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name: str, raw: str) -> Any:
    kind = _FIELDS[name].type
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind.startswith("tuple"):
            return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def parse_overrides(pairs: dict[str, str]) -> dict[str, Any]:
    out = {}
    for key, raw in pairs.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def read_config_file(path) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value
    return parse_overrides(pairs)


def load_config(path=None, **overrides: Any) -> ExperimentConfig:
    values: dict[str, Any] = {}
    if path is not None:
        values.update(read_config_file(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - set(_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return ExperimentConfig(**values)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            value = ",".join(repr(v) for v in value)
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
