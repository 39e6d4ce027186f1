"""Offline policy learning: NFQ, bootstrapping-free NFQ, policy evaluation."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import env as env_mod
from .data import Dataset
from .env import EnvConfig
from .model import DynamicsModel
from .neural import Mlp, TrainConfig, fit
from .rollout import Policy, value_mb_batch
from .valuation import FqeDiverged, QFunction, q_input_norm


class GreedyPolicy(Policy):
    """argmax over the two actions; ties go to action 0."""

    def __init__(self, q: QFunction):
        self.q = q

    def act_batch(self, states):
        both = self.q.values_both(states)
        return (both[:, 1] > both[:, 0]).astype(np.int64)


@dataclass(frozen=True)
class PolicyEvaluation:
    mean_discounted_return: float
    survival_fraction: float
    perfect: bool


def evaluate_policy(pi: Policy, n_episodes: int, max_steps: int, gamma: float,
                    seed: int, cfg: EnvConfig) -> PolicyEvaluation:
    """Seeded true-environment evaluation; perfect iff every episode survives."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    returns, _, reached = env_mod.run_episodes_batch(
        pi, n_episodes, seed, max_steps, gamma, cfg
    )
    survival = float(reached.mean())
    return PolicyEvaluation(float(returns.mean()), survival, bool(reached.all()))


@dataclass
class IterationRecord:
    iteration: int
    mean_return: float
    survival_fraction: float
    perfect: bool


@dataclass
class LearningRun:
    algorithm: str
    seed: int
    records: list = field(default_factory=list)
    final_q: QFunction | None = None

    @property
    def perfect_ratio(self) -> float:
        if not self.records:
            return 0.0
        return sum(r.perfect for r in self.records) / len(self.records)

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LEARNING_CSV_HEADER)
            for r in self.records:
                writer.writerow([r.iteration, repr(r.mean_return),
                                 repr(r.survival_fraction), int(r.perfect)])

    def save_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({
                "algorithm": self.algorithm,
                "seed": self.seed,
                "iterations": len(self.records),
                "perfect_ratio": self.perfect_ratio,
            }, fh, indent=2, sort_keys=True)
            fh.write("\n")


LEARNING_CSV_HEADER = ["iteration", "mean_return", "survival_fraction", "perfect"]


def _check_guard(targets: np.ndarray, r_max: float, gamma: float, where: str) -> None:
    guard = r_max / (1.0 - gamma) * 10.0 if gamma < 1.0 else np.inf
    if np.mean(np.abs(targets)) > guard:
        raise FqeDiverged(f"{where}: mean |target| exceeded {guard:.3g}")


def _fit_q(d: Dataset, targets: np.ndarray, cfg: TrainConfig, epochs: int,
           hidden: int, norm) -> QFunction:
    # classic NFQ style: re-initialize from the same seed every iteration
    net = Mlp.init([5, hidden, 1], np.random.default_rng(cfg.seed))
    x = norm.normalize(
        np.concatenate([d.states, d.actions[:, None].astype(np.float64)], axis=1)
    )
    fit(net, x, targets[:, None], epochs, cfg.batch_size, cfg.learning_rate, cfg.seed + 1)
    return QFunction(net, norm)


def nfq_iteration(q_prev: QFunction, d: Dataset, gamma: float, cfg: TrainConfig,
                  env_cfg: EnvConfig, epochs: int = 100, hidden: int = 64) -> QFunction:
    """One NFQ sweep: fit a fresh net to r + gamma * max_a Q_prev(s', a)."""
    if len(d) == 0:
        raise ValueError("dataset is empty")
    if gamma == 0.0:
        boot = np.zeros(len(d))
    else:
        boot = q_prev.values_both(d.next_states).max(axis=1)
    targets = d.rewards + gamma * boot
    _check_guard(targets, float(np.max(np.abs(d.rewards))), gamma, "nfq_iteration")
    return _fit_q(d, targets, cfg, epochs, hidden, q_prev.input_norm)


def bsf_nfq_iteration(q_prev: QFunction, d: Dataset, m: DynamicsModel, gamma: float,
                      k_horizon: int, cfg: TrainConfig, env_cfg: EnvConfig,
                      epochs: int = 100, hidden: int = 64) -> QFunction:
    """One bootstrapping-free sweep: targets use model-rollout values instead.

    Targets are r + gamma * V_rollout(s') where the rollout follows the
    greedy policy of Q_prev and stops at simulated termination; a terminal
    successor therefore contributes zero.
    """
    if len(d) == 0:
        raise ValueError("dataset is empty")
    if gamma == 0.0:
        boot = np.zeros(len(d))
    else:
        pi = GreedyPolicy(q_prev)
        boot = value_mb_batch(m, d.next_states, pi, gamma, k_horizon,
                              terminate=True, cfg=env_cfg)
    targets = d.rewards + gamma * boot
    _check_guard(targets, float(np.max(np.abs(d.rewards))), gamma, "bsf_nfq_iteration")
    return _fit_q(d, targets, cfg, epochs, hidden, q_prev.input_norm)


@dataclass
class EvalConfig:
    n_episodes: int = 100
    max_steps: int = 1000
    gamma: float = 0.99
    seed: int = 12345


def nfq(d: Dataset, gamma: float, n_iterations: int, eval_cfg: EvalConfig,
        cfg: TrainConfig, env_cfg: EnvConfig, epochs: int = 100,
        hidden: int = 64) -> LearningRun:
    """Full NFQ run from Q_0 = 0 with per-iteration greedy-policy evaluation."""
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    norm = q_input_norm(d)
    q = QFunction(Mlp.zeros([5, hidden, 1]), norm)
    run = LearningRun(algorithm="NFQ", seed=cfg.seed)
    for i in range(1, n_iterations + 1):
        q = nfq_iteration(q, d, gamma, cfg, env_cfg, epochs=epochs, hidden=hidden)
        ev = evaluate_policy(GreedyPolicy(q), eval_cfg.n_episodes, eval_cfg.max_steps,
                             eval_cfg.gamma, eval_cfg.seed, env_cfg)
        run.records.append(IterationRecord(i, ev.mean_discounted_return,
                                           ev.survival_fraction, ev.perfect))
    run.final_q = q
    return run


def bsf_nfq(d: Dataset, m: DynamicsModel, gamma: float, n_iterations: int,
            k_horizon: int, eval_cfg: EvalConfig, cfg: TrainConfig,
            env_cfg: EnvConfig, epochs: int = 100, hidden: int = 64) -> LearningRun:
    """Full BSF-NFQ run from Q_0 = 0."""
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    norm = q_input_norm(d)
    q = QFunction(Mlp.zeros([5, hidden, 1]), norm)
    run = LearningRun(algorithm="BSF-NFQ", seed=cfg.seed)
    for i in range(1, n_iterations + 1):
        q = bsf_nfq_iteration(q, d, m, gamma, k_horizon, cfg, env_cfg,
                              epochs=epochs, hidden=hidden)
        ev = evaluate_policy(GreedyPolicy(q), eval_cfg.n_episodes, eval_cfg.max_steps,
                             eval_cfg.gamma, eval_cfg.seed, env_cfg)
        run.records.append(IterationRecord(i, ev.mean_discounted_return,
                                           ev.survival_fraction, ev.perfect))
    run.final_q = q
    return run
