"""Client-side valuation, local regret and the transmit/skip decision."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigError, ContractError
from .fedcore import Feedback
from .model import ModelParams, accuracy


@dataclass
class ValuationHistory:
    """One device's valuation series and the latest feedback it received.

    ``values[t]`` is the device's valuation of the global model broadcast at
    round ``t`` (``values[0]`` is the initial model). Regret is measured
    against the valuation at ``tx_round``, the last round in which the device
    actually transmitted, so it reflects what participating has bought it.
    """

    device_id: int
    delta: float
    values: dict[int, float] = field(default_factory=dict)
    feedback_round: int = 0
    feedback_level: float = 0.0
    tx_round: int = 0
    dropped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError(f"device {self.device_id}: delta must be in [0, 1]")

    @property
    def baseline(self) -> float:
        if self.tx_round not in self.values:
            raise ContractError(f"device {self.device_id} has no valuation for round {self.tx_round}")
        return self.values[self.tx_round]

    def mark_transmitted(self, round: int) -> None:
        if round < self.tx_round:
            raise ContractError(f"device {self.device_id}: transmit round went backwards")
        self.tx_round = round


@dataclass(frozen=True)
class ParticipationDecision:
    device_id: int
    round: int
    transmit: bool
    relevance: float
    regret: float


def evaluate_valuation(w: ModelParams, val_indices: np.ndarray, ds: Dataset) -> float:
    if len(val_indices) == 0:
        raise ConfigError("device has an empty validation split")
    return accuracy(w, val_indices, ds)


def local_regret(v_t: float, v_prev: float) -> float:
    return v_t - v_prev


def relevance(regret: float, feedback_level: float, gamma: float, lam: float) -> float:
    """0.5 + gain * regret clipped to [0, 1]; feedback raises the gain up to (1 + lam)x."""
    gain = gamma * (1.0 + lam * feedback_level)
    return min(1.0, max(0.0, 0.5 + gain * regret))


def decide(
    regret: float,
    delta: float,
    feedback: Feedback | float,
    gamma: float = 2.0,
    lam: float = 1.0,
    device_id: int = 0,
    round: int | None = None,
) -> ParticipationDecision:
    """Transmit iff the relevance score strictly exceeds ``delta``.

    ``feedback`` is either the broadcast payload or its normalised regret level.
    """
    if not 0.0 <= delta <= 1.0:
        raise ContractError("delta must be in [0, 1]")
    if not gamma > 0 or lam < 0:
        raise ContractError("need gamma > 0 and lambda >= 0")
    if isinstance(feedback, Feedback):
        level, t = feedback.normalized, feedback.round
    else:
        level, t = float(feedback), round
    rho = relevance(regret, level, gamma, lam)
    return ParticipationDecision(device_id, t if round is None else round, rho > delta, rho, regret)


def apply_feedback(history: ValuationHistory, feedback: Feedback, valuation: float) -> ValuationHistory:
    """Store the feedback level and the device's valuation of the broadcast model."""
    if feedback.round <= history.feedback_round:
        raise ContractError(
            f"device {history.device_id}: feedback for round {feedback.round} "
            f"after round {history.feedback_round}"
        )
    if not 0.0 <= valuation <= 1.0:
        raise ContractError("valuation must lie in [0, 1]")
    history.feedback_round = feedback.round
    history.feedback_level = feedback.normalized
    history.values[feedback.round] = valuation
    return history
