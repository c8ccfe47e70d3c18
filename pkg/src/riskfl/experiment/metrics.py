"""Summary metrics over round logs and the delta sweep."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..errors import ContractError
from .config import ExperimentConfig
from .runner import Environment, RoundLog, build_environment, run


def rounds_to_accuracy(logs: Sequence[RoundLog], target: float) -> int | None:
    """1-indexed round at which test accuracy first reaches ``target``."""
    if not 0.0 < target < 1.0:
        raise ContractError("target accuracy must be in (0, 1)")
    for entry in logs:
        if entry.test_accuracy >= target:
            return entry.round
    return None


def links_per_round(logs: Sequence[RoundLog], first_n: int = 10) -> float:
    if first_n < 1:
        raise ContractError("first_n must be >= 1")
    head = logs[:first_n]
    if not head:
        return 0.0
    return sum(e.links for e in head) / len(head)


@dataclass(frozen=True)
class SweepRow:
    delta: float
    rounds_to_target: int | None
    avg_links: float


def sweep_delta(
    base: ExperimentConfig,
    deltas: Sequence[float] | None = None,
    env: Environment | None = None,
) -> list[SweepRow]:
    """Run the risk-averse variant once per delta on shared data and seed."""
    deltas = list(base.deltas if deltas is None else deltas)
    if not deltas:
        raise ContractError("sweep needs at least one delta")
    env = env if env is not None else build_environment(base)
    rows = []
    for d in deltas:
        logs = run(base.replace(variant="alg1", delta=d), env)
        rows.append(
            SweepRow(d, rounds_to_accuracy(logs, base.target_accuracy), links_per_round(logs, base.links_window))
        )
    return rows
