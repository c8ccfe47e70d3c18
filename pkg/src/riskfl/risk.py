"""UCB / CVaR scoring, device selection, CVaR-regret accounting and risk profiles."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import ContractError

if TYPE_CHECKING:
    from .valuation import ContributionHistory

EXPLORE = math.inf
"""Score of an arm with no information; beats every finite score."""


def ucb_score(mean: float, n_selected: int, t: int) -> float:
    if t < 1:
        raise ContractError("rounds start at 1")
    if n_selected == 0:
        return EXPLORE
    return mean + math.sqrt(math.log(t) / n_selected)


def empirical_cvar(samples: Sequence[float], alpha: float) -> float:
    """Lower-tail CVaR: mean of the worst ``alpha`` fraction of the empirical distribution.

    The order statistic straddling the ``alpha * n`` boundary contributes
    fractionally.
    """
    if not 0.0 < alpha <= 1.0:
        raise ContractError(f"alpha must be in (0, 1], got {alpha}")
    raw = np.asarray(samples, dtype=np.float64)
    if raw.size == 0:
        raise ContractError("CVaR of an empty sample")
    if not np.all(np.isfinite(raw)):
        raise ContractError("CVaR of non-finite samples")
    if alpha == 1.0:
        return float(np.mean(raw))
    x = np.sort(raw)
    mass = alpha * x.size
    j = max(1, math.ceil(mass - 1e-12))
    return float((x[: j - 1].sum() + (mass - j + 1) * x[j - 1]) / mass)


def cvar_ucb_score(samples: Sequence[float], theta: float, n_selected: int, t: int) -> float:
    if n_selected == 0 or len(samples) == 0:
        return EXPLORE
    clamped = np.clip(np.asarray(samples, dtype=np.float64), 0.0, 1.0)
    return empirical_cvar(clamped, theta) + math.sqrt(math.log(t) / n_selected)


def select_devices(scores: Sequence[float], budget: int, available: Sequence[int] | None = None) -> list[int]:
    """Top-``budget`` devices by score; ties go to the lower device id."""
    if budget < 1:
        raise ContractError("selection budget must be >= 1")
    pool = range(len(scores)) if available is None else available
    ranked = sorted(pool, key=lambda k: (-scores[k], k))
    return sorted(ranked[:budget])


@dataclass
class ArmStats:
    """Server-side bandit state: selection counts plus the contribution history."""

    history: ContributionHistory
    counts: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(len(self.history), dtype=np.int64)

    def mark_selected(self, devices: Sequence[int]) -> None:
        for k in devices:
            self.counts[k] += 1

    def ucb_scores(self, t: int) -> list[float]:
        return [
            ucb_score(self.history.mean(k), int(self.counts[k]), t)
            if self.history.count(k) else EXPLORE
            for k in range(len(self.counts))
        ]

    def cvar_scores(self, theta: float, t: int) -> list[float]:
        return [
            cvar_ucb_score(self.history.samples(k), theta, int(self.counts[k]), t)
            for k in range(len(self.counts))
        ]


def clamp_unit(samples: Sequence[float]) -> np.ndarray:
    return np.clip(np.asarray(samples, dtype=np.float64), 0.0, 1.0)


def best_cvar(per_device_samples: Sequence[Sequence[float]], theta: float) -> float:
    """max_k CVaR_theta over devices with at least one (clamped) sample; 0 if none."""
    values = [empirical_cvar(clamp_unit(s), theta) for s in per_device_samples if len(s)]
    return max(values, default=0.0)


def regret_bound(tau: int, n_devices: int, theta: float, eps_max: float) -> float:
    """(4 eps_max / theta) * sqrt(tau * K * ln(sqrt(2) * tau))."""
    if tau < 1 or n_devices < 1:
        raise ContractError("regret bound needs tau >= 1 and K >= 1")
    if not 0.0 < theta <= 1.0 or not eps_max > 0:
        raise ContractError("regret bound needs theta in (0, 1] and eps_max > 0")
    return 4.0 * eps_max / theta * math.sqrt(tau * n_devices * math.log(math.sqrt(2.0) * tau))


@dataclass
class RegretLedger:
    theta: float
    n_devices: int
    eps_max: float
    realized: list[float] = field(default_factory=list)
    regret: list[float] = field(default_factory=list)
    bound: list[float] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.realized)

    @property
    def current(self) -> float:
        return self.regret[-1] if self.regret else 0.0


def cvar_regret_step(
    ledger: RegretLedger,
    round_samples: Sequence[float],
    best_cvar_estimate: float,
    theta: float | None = None,
) -> RegretLedger:
    """Append one round: realised CVaR of the selected set and the regret at tau = rounds."""
    theta = ledger.theta if theta is None else theta
    realized = empirical_cvar(clamp_unit(round_samples), theta) if len(round_samples) else 0.0
    ledger.realized.append(realized)
    tau = ledger.rounds
    ledger.regret.append(tau * best_cvar_estimate - math.fsum(ledger.realized))
    ledger.bound.append(regret_bound(tau, ledger.n_devices, theta, ledger.eps_max))
    return ledger


def device_risk(samples: Sequence[float], eps: float) -> float:
    """Empirical probability that the device fails to contribute more than ``eps``."""
    hits = sum(1 for s in samples if s > eps)
    return 1.0 - hits / max(1, len(samples))


BUCKET_WIDTH = 0.1


def risk_bucket(theta: float) -> float:
    return round(round(theta / BUCKET_WIDTH) * BUCKET_WIDTH, 10)


@dataclass(frozen=True)
class RiskProfile:
    eps: float = 0.001
    counts: dict[float, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def average(self) -> float:
        total = self.total
        if total == 0:
            return 0.0
        return sum(b * c for b, c in self.counts.items()) / total


def update_risk_profile(
    profile: RiskProfile, risks: Sequence[float], improvements: Sequence[float]
) -> RiskProfile:
    """Count devices that improve the model by at least ``eps``, grouped by risk bucket."""
    if len(risks) != len(improvements):
        raise ContractError("one risk and one improvement per device")
    counts: dict[float, int] = {}
    for theta, gain in zip(risks, improvements):
        if not 0.0 <= theta <= 1.0:
            raise ContractError(f"device risk {theta} outside [0, 1]")
        if gain >= profile.eps:
            b = risk_bucket(theta)
            counts[b] = counts.get(b, 0) + 1
    return RiskProfile(profile.eps, dict(sorted(counts.items())))


def bernstein_bound(eps: float, variance_sum: float, theta_th: float) -> float:
    """exp(-eps^2 / (2 (A + eps * theta_th / 3))) for the deviation of a sum of bounded risks."""
    if eps < 0 or variance_sum < 0 or theta_th < 0:
        raise ContractError("Bernstein bound arguments must be non-negative")
    if eps == 0:
        return 1.0
    denom = 2.0 * (variance_sum + eps * theta_th / 3.0)
    if denom == 0:
        raise ContractError("degenerate Bernstein bound: A = theta_th = 0 with eps > 0")
    return math.exp(-eps * eps / denom)
