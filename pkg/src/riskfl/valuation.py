"""Coalition utilities and Shapley values over one round's received updates."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ContractError
from .fedcore import ClientUpdate, aggregate
from .model import ModelParams, accuracy

MAX_EXACT_PLAYERS = 12
MAX_PLAYERS = 63

Utility = Callable[[int], float]
"""Maps a coalition bitmask (bit i = player i) to its value."""


@dataclass
class CoalitionUtility:
    """Validation accuracy of the model aggregated from a subset of updates.

    Coalitions are bitmasks over ``updates`` in list order. Values are memoised;
    ``evaluations`` counts actual model evaluations (cache misses).
    """

    w: ModelParams
    updates: Sequence[ClientUpdate]
    eta: float
    ds: Dataset
    val_indices: np.ndarray
    total_samples: int | None = None
    cache: dict[int, float] = field(default_factory=dict)
    evaluations: int = 0

    def __post_init__(self):
        if len(self.updates) > MAX_PLAYERS:
            raise ContractError(f"at most {MAX_PLAYERS} players per round")
        self.cache[0] = accuracy(self.w, self.val_indices, self.ds)
        self.evaluations = 1

    @property
    def n_players(self) -> int:
        return len(self.updates)

    def __call__(self, mask: int) -> float:
        hit = self.cache.get(mask)
        if hit is not None:
            return hit
        members = [u for i, u in enumerate(self.updates) if mask >> i & 1]
        model = aggregate(self.w, members, self.eta, self.total_samples)
        value = accuracy(model, self.val_indices, self.ds)
        self.evaluations += 1
        self.cache[mask] = value
        return value


def shapley_exact(m: int, utility: Utility) -> np.ndarray:
    """Enumerate all coalitions: phi_k = sum_S [U(S+k) - U(S)] / (m * C(m-1, |S|))."""
    if m > MAX_EXACT_PLAYERS:
        raise ContractError(f"exact Shapley limited to {MAX_EXACT_PLAYERS} players; use shapley_mc")
    if m == 0:
        return np.zeros(0)
    values = np.array([utility(mask) for mask in range(1 << m)])
    sizes = np.array([mask.bit_count() for mask in range(1 << m)])
    weight = np.array([1.0 / (m * math.comb(m - 1, s)) if s < m else 0.0 for s in range(m + 1)])
    phi = np.zeros(m)
    masks = np.arange(1 << m)
    for k in range(m):
        bit = 1 << k
        without = masks[(masks & bit) == 0]
        marg = values[without | bit] - values[without]
        # fsum is order-independent, so symmetric players get bit-identical values
        phi[k] = math.fsum(weight[sizes[without]] * marg)
    return phi


def shapley_mc(
    m: int,
    utility: Utility,
    n_permutations: int,
    rng: np.random.Generator | None = None,
    permutations: Iterable[Sequence[int]] | None = None,
) -> np.ndarray:
    """Permutation-sampling Shapley estimate.

    Averages marginal contributions along ``n_permutations`` uniformly random
    orderings drawn from ``rng``, or along the explicit ``permutations`` if given.
    """
    if m == 0:
        return np.zeros(0)
    if permutations is None:
        if n_permutations < 1:
            raise ContractError("need at least one permutation")
        if rng is None:
            raise ContractError("shapley_mc needs an rng when permutations are not given")
        permutations = (rng.permutation(m) for _ in range(n_permutations))
    total = np.zeros(m)
    count = 0
    for perm in permutations:
        mask = 0
        prev = utility(0)
        for k in perm:
            mask |= 1 << int(k)
            cur = utility(mask)
            total[k] += cur - prev
            prev = cur
        count += 1
    return total / count


def shapley(m: int, utility: Utility, n_permutations: int, rng: np.random.Generator) -> np.ndarray:
    if m <= MAX_EXACT_PLAYERS:
        return shapley_exact(m, utility)
    return shapley_mc(m, utility, n_permutations, rng)


class ContributionHistory:
    """Per-device Shapley samples, at most one per round."""

    def __init__(self, n_devices: int):
        self._samples: list[list[tuple[int, float]]] = [[] for _ in range(n_devices)]

    def __len__(self) -> int:
        return len(self._samples)

    def record(self, device: int, round: int, value: float) -> None:
        if any(r == round for r, _ in self._samples[device]):
            raise ContractError(f"device {device} already has a sample for round {round}")
        self._samples[device].append((round, float(value)))

    def samples(self, device: int) -> list[float]:
        return [v for _, v in self._samples[device]]

    def rounds(self, device: int) -> list[int]:
        return [r for r, _ in self._samples[device]]

    def count(self, device: int) -> int:
        return len(self._samples[device])

    def mean(self, device: int) -> float:
        s = self.samples(device)
        return sum(s) / len(s) if s else 0.0


def record_contribution(history: ContributionHistory, device: int, round: int, value: float) -> None:
    history.record(device, round, value)
