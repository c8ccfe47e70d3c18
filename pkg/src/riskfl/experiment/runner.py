"""Round loop for the risk-averse protocol and its baselines."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import data as datamod
from ..data import Dataset
from ..errors import ConfigError
from ..fedcore import ClientUpdate, Feedback, aggregate, make_feedback
from ..model import Layout, ModelParams, accuracy, init_params, local_train
from ..participation import (
    ParticipationDecision,
    ValuationHistory,
    apply_feedback,
    decide,
    evaluate_valuation,
    local_regret,
)
from ..risk import (
    ArmStats,
    RegretLedger,
    RiskProfile,
    best_cvar,
    cvar_regret_step,
    device_risk,
    regret_bound,
    select_devices,
    update_risk_profile,
)
from ..valuation import CoalitionUtility, ContributionHistory, record_contribution, shapley
from .config import ExperimentConfig

log = logging.getLogger(__name__)

SERVER = -1
DATA = -2


class SimulationError(RuntimeError):
    """A numeric or runtime failure inside a round."""


def stream(master: int, actor: int, round: int) -> np.random.Generator:
    """Independent generator for ``(actor, round)``; actor -1 is the server."""
    return np.random.default_rng(np.random.SeedSequence(master, spawn_key=(actor + 2, round)))


@dataclass(frozen=True)
class Environment:
    """Data and splits shared by every variant run from one config."""

    ds: Dataset
    test_idx: np.ndarray
    server_val_idx: np.ndarray
    device_train: list[np.ndarray]
    device_val: list[np.ndarray]

    @property
    def n_devices(self) -> int:
        return len(self.device_train)

    @property
    def device_sizes(self) -> list[int]:
        return [len(ix) for ix in self.device_train]


def build_environment(cfg: ExperimentConfig) -> Environment:
    seeds = stream(cfg.seed, DATA, 0).integers(0, 2**63, size=5)
    if cfg.dataset == "mnist":
        ds = datamod.load_idx(cfg.mnist_images, cfg.mnist_labels, cfg.n_classes)
    else:
        ds = datamod.synth_gaussian_mixture(
            cfg.n_samples, cfg.n_features, cfg.n_classes, cfg.class_sep, int(seeds[0])
        )
    pool, test_idx = datamod.split_train_val(np.arange(ds.n), cfg.test_fraction, int(seeds[1]))
    pool, server_val = datamod.split_train_val(pool, cfg.server_val_fraction, int(seeds[2]))
    pool_ds = Dataset(ds.features[pool], ds.labels[pool], ds.n_classes)
    if cfg.partition == "iid":
        part = datamod.partition_iid(pool_ds, cfg.n_devices, int(seeds[3]))
    else:
        part = datamod.partition_noniid_shards(pool_ds, cfg.n_devices, cfg.shards_per_device, int(seeds[3]))
    train, val = [], []
    for k, local in enumerate(part.indices):
        if len(local) < 2:
            raise ConfigError(f"device {k} holds {len(local)} samples; need at least 2")
        tr, va = datamod.split_train_val(pool[local], cfg.device_val_fraction, int(seeds[4]) + k)
        train.append(tr)
        val.append(va)
    return Environment(ds, test_idx, server_val, train, val)


@dataclass
class RoundLog:
    round: int
    test_accuracy: float
    selected: list[int]
    transmitted: list[int]
    shapley: dict[int, float] = field(default_factory=dict)
    regret: float = 0.0
    regret_bound: float = 0.0
    avg_risk: float = 0.0
    decisions: list[ParticipationDecision] = field(default_factory=list)
    explored: bool = False
    wall_time: float = 0.0

    @property
    def links(self) -> int:
        return len(self.transmitted)

    @property
    def regret_signal(self) -> float:
        """Regret as broadcast to devices in the next round (clamped at 0)."""
        return max(0.0, self.regret)


def _map(workers: int, fn, items):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class Simulation:
    """Mutable server state for one run; advance with :meth:`step`."""

    def __init__(self, cfg: ExperimentConfig, env: Environment | None = None):
        self.cfg = cfg
        self.env = env if env is not None else build_environment(cfg)
        if self.env.n_devices != cfg.n_devices:
            raise ConfigError("environment was built for a different device count")
        ds = self.env.ds
        self.layout = Layout(cfg.arch, ds.p, ds.n_classes, cfg.hidden if cfg.arch == "mlp" else 0)
        self.w = init_params(self.layout, int(stream(cfg.seed, DATA, 1).integers(0, 2**63)))
        self.t = 0
        self.contributions = ContributionHistory(cfg.n_devices)
        self.arms = ArmStats(self.contributions)
        self.ledger = RegretLedger(cfg.theta, cfg.n_devices, cfg.eps_max)
        self.profile = RiskProfile(cfg.improve_eps)
        self.histories = [ValuationHistory(k, cfg.delta_for(k)) for k in range(cfg.n_devices)]
        for k, h in enumerate(self.histories):
            h.values[0] = evaluate_valuation(self.w, self.env.device_val[k], ds)
        self.total_samples = sum(self.env.device_sizes)
        self.pooled = np.sort(np.concatenate(self.env.device_train))
        self.logs: list[RoundLog] = []

    # -- selection -------------------------------------------------------
    def _select(self, t: int, rng: np.random.Generator) -> tuple[list[int], bool]:
        cfg = self.cfg
        available = [k for k in range(cfg.n_devices) if not self.histories[k].dropped]
        if cfg.variant == "fedsgd_full":
            return available, False
        if not available:
            return [], False
        if cfg.variant == "fedsgd_partial":
            m = min(len(available), max(1, round(cfg.partial_fraction * cfg.n_devices)))
            return sorted(int(k) for k in rng.choice(available, size=m, replace=False)), False
        m = min(cfg.budget, len(available))
        if rng.random() < cfg.explore_prob:
            return sorted(int(k) for k in rng.choice(available, size=m, replace=False)), True
        if cfg.variant == "alg1":
            scores = self.arms.cvar_scores(cfg.theta, t)
        else:
            scores = self.arms.ucb_scores(t)
        return select_devices(scores, m, available), False

    # -- client side -------------------------------------------------------
    def _client(self, k: int, t: int, feedback: Feedback):
        cfg, env = self.cfg, self.env
        rng = stream(cfg.seed, k, t)
        w_local, update = local_train(
            feedback.weights, env.device_train[k], env.ds, cfg.local_epochs, cfg.batch_size, cfg.eta, rng
        )
        decision = None
        if cfg.variant == "alg1":
            hist = self.histories[k]
            apply_feedback(hist, feedback, evaluate_valuation(feedback.weights, env.device_val[k], env.ds))
            candidate = evaluate_valuation(w_local, env.device_val[k], env.ds)
            regret = local_regret(candidate, hist.baseline)
            decision = decide(regret, hist.delta, feedback, cfg.gamma, cfg.lam, device_id=k)
            if decision.transmit:
                hist.mark_transmitted(t)
        return ClientUpdate(k, t, update, len(env.device_train[k])), decision

    # -- one round -------------------------------------------------------
    def step(self) -> RoundLog:
        cfg, env = self.cfg, self.env
        t = self.t + 1
        started = time.perf_counter()
        try:
            if cfg.variant == "centralized":
                entry = self._centralized_round(t)
            else:
                entry = self._federated_round(t)
        except (FloatingPointError, ArithmeticError) as exc:
            raise SimulationError(f"round {t}: {exc}") from exc
        entry.wall_time = time.perf_counter() - started
        self.t = t
        self.logs.append(entry)
        return entry

    def _centralized_round(self, t: int) -> RoundLog:
        cfg, env = self.cfg, self.env
        self.w, _ = local_train(
            self.w, self.pooled, env.ds, cfg.local_epochs, cfg.batch_size, cfg.eta, stream(cfg.seed, SERVER, t)
        )
        return RoundLog(t, accuracy(self.w, env.test_idx, env.ds), [], [])

    def _federated_round(self, t: int) -> RoundLog:
        cfg, env = self.cfg, self.env
        server_rng = stream(cfg.seed, SERVER, t)
        selected, explored = self._select(t, server_rng)
        self.arms.mark_selected(selected)
        feedback = make_feedback(self.w, max(0.0, self.ledger.current), t, cfg.theta, cfg.n_devices, cfg.eps_max)

        results = _map(cfg.workers, lambda k: self._client(k, t, feedback), selected)
        decisions = [d for _, d in results if d is not None]
        updates = [u for u, d in results if d is None or d.transmit]
        if cfg.permanent_dropout:
            for d in decisions:
                if not d.transmit:
                    self.histories[d.device_id].dropped = True

        total = self.total_samples if cfg.aggregate_norm == "global" else None
        w_next = aggregate(self.w, updates, cfg.eta, total)

        shap: dict[int, float] = {}
        if cfg.variant in ("alg1", "ucb"):
            shap = self._value_round(t, updates, total, server_rng)
        entry = RoundLog(
            t,
            accuracy(w_next, env.test_idx, env.ds),
            selected,
            [u.device_id for u in updates],
            shap,
            self.ledger.current,
            regret_bound(t, cfg.n_devices, cfg.theta, cfg.eps_max),
            self.profile.average,
            decisions,
            explored,
        )
        self.w = w_next
        return entry

    def _value_round(self, t, updates, total, rng) -> dict[int, float]:
        cfg, env = self.cfg, self.env
        utility = CoalitionUtility(self.w, updates, cfg.eta, env.ds, env.server_val_idx, total)
        phi = shapley(len(updates), utility, cfg.shapley_permutations, rng)
        shap = {u.device_id: float(v) for u, v in zip(updates, phi)}
        for k, v in shap.items():
            record_contribution(self.contributions, k, t, v)
        samples = [self.contributions.samples(k) for k in range(cfg.n_devices)]
        cvar_regret_step(self.ledger, list(shap.values()), best_cvar(samples, cfg.theta))
        self.profile = update_risk_profile(
            self.profile,
            [device_risk(s, cfg.improve_eps) for s in samples],
            [self.contributions.mean(k) for k in range(cfg.n_devices)],
        )
        return shap

    def run(self) -> list[RoundLog]:
        while self.t < self.cfg.rounds:
            self.step()
        return self.logs


def run(cfg: ExperimentConfig, env: Environment | None = None) -> list[RoundLog]:
    """Run ``cfg.rounds`` rounds of ``cfg.variant`` and return the per-round logs."""
    return Simulation(cfg, env).run()
