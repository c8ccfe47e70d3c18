"""Parameter-server aggregation and the per-round feedback payload."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .model import ModelParams
from .risk import regret_bound

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClientUpdate:
    device_id: int
    round: int
    gradient: np.ndarray = field(repr=False)
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ContractError(f"device {self.device_id}: sample count must be >= 1")
        if self.device_id < 0:
            raise ContractError(f"invalid device id {self.device_id}")
        if not np.all(np.isfinite(self.gradient)):
            raise ContractError(f"device {self.device_id}: non-finite update")


@dataclass(frozen=True)
class Feedback:
    round: int
    weights: ModelParams
    regret_signal: float
    regret_bound_value: float

    def __post_init__(self):
        if self.regret_signal < 0:
            raise ContractError("regret signal must be non-negative")
        if not self.regret_bound_value > 0:
            raise ContractError("regret bound must be positive")

    @property
    def normalized(self) -> float:
        """Regret signal as a fraction of the bound, saturating at 1."""
        return min(1.0, self.regret_signal / self.regret_bound_value)


def aggregation_weights(updates: list[ClientUpdate], total_samples: int | None = None) -> np.ndarray:
    counts = np.array([u.n_samples for u in updates], dtype=np.float64)
    return counts / (counts.sum() if total_samples is None else total_samples)


def aggregate(
    w: ModelParams,
    updates: list[ClientUpdate],
    eta: float,
    total_samples: int | None = None,
) -> ModelParams:
    """Sample-weighted gradient step over the received updates.

    By default the weights are normalised over the participants' sample mass.
    Pass ``total_samples`` (the global D) to divide by the full population
    instead, which shrinks the step when few devices participate.
    """
    if not updates:
        log.info("no updates received; global model unchanged")
        return w
    rounds = {u.round for u in updates}
    if len(rounds) != 1:
        raise ContractError(f"updates from mixed rounds {sorted(rounds)}")
    ordered = sorted(updates, key=lambda u: u.device_id)
    for u in ordered:
        if u.gradient.shape != w.w.shape:
            raise ContractError(f"device {u.device_id}: update layout does not match model")
    weights = aggregation_weights(ordered, total_samples)
    step = np.zeros_like(w.w)
    for a, u in zip(weights, ordered):
        step += a * u.gradient
    return ModelParams(w.w - eta * step, w.layout)


def make_feedback(
    w_next: ModelParams,
    regret_signal: float,
    t: int,
    theta: float,
    n_devices: int,
    eps_max: float,
) -> Feedback:
    if t < 1:
        raise ContractError("feedback rounds start at 1")
    return Feedback(t, w_next, float(regret_signal), regret_bound(t, n_devices, theta, eps_max))
