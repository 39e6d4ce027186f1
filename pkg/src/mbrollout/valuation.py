"""Off-policy value estimation: FQE, fitted rollout values, true-return oracle."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import env as env_mod
from .data import Dataset
from .env import EnvConfig
from .model import DynamicsModel, Normalizer
from .neural import Mlp, TrainConfig, fit, forward, train
from .rollout import Policy, value_mb_batch


class FqeDiverged(RuntimeError):
    """Bootstrap targets grew past any value reachable under the reward bound."""


@dataclass
class QFunction:
    """State-action value net over (x, xdot, theta, thetadot, action)."""

    net: Mlp
    input_norm: Normalizer

    @staticmethod
    def zeros(hidden: int = 64) -> "QFunction":
        return QFunction(Mlp.zeros([5, hidden, 1]), Normalizer.identity(5))

    def values(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        x = np.concatenate(
            [np.asarray(states, dtype=np.float64),
             np.asarray(actions, dtype=np.float64)[:, None]], axis=1
        )
        return forward(self.net, self.input_norm.normalize(x))[:, 0]

    def values_both(self, states: np.ndarray) -> np.ndarray:
        """Q(s, 0) and Q(s, 1) stacked as columns (N, 2)."""
        n = np.asarray(states).shape[0]
        q0 = self.values(states, np.zeros(n))
        q1 = self.values(states, np.ones(n))
        return np.stack([q0, q1], axis=1)


def q_input_norm(d: Dataset) -> Normalizer:
    x = np.concatenate([d.states, d.actions[:, None].astype(np.float64)], axis=1)
    return Normalizer.from_data(x)


def value_mf(q: QFunction, s, pi: Policy) -> float:
    arr = s.as_array() if hasattr(s, "as_array") else np.asarray(s, dtype=np.float64)
    a = pi.act_batch(arr[None, :])
    return float(q.values(arr[None, :], a)[0])


def value_mf_batch(q: QFunction, states: np.ndarray, pi: Policy) -> np.ndarray:
    actions = pi.act_batch(np.asarray(states, dtype=np.float64))
    return q.values(states, actions)


def fqe(d: Dataset, pi: Policy, gamma: float, n_iterations: int, cfg: TrainConfig,
        env_cfg: EnvConfig, epochs_per_iteration: int = 3, hidden: int = 64) -> QFunction:
    """Fitted Q evaluation: iterated regression on bootstrapped targets.

    Each iteration regresses a warm-started net (fresh Adam state) onto
    r + gamma * Q_prev(s', pi(s')); the bootstrap term is taken verbatim,
    with no special-casing of terminal successors.
    """
    if n_iterations < 1:
        raise ValueError("n_iterations must be >= 1")
    norm = q_input_norm(d)
    x = norm.normalize(
        np.concatenate([d.states, d.actions[:, None].astype(np.float64)], axis=1)
    )
    pi_next = pi.act_batch(d.next_states)
    r_max = float(np.max(np.abs(d.rewards)))
    guard = r_max / (1.0 - gamma) * 10.0 if gamma < 1.0 else np.inf

    q = QFunction(Mlp.init([5, hidden, 1], np.random.default_rng(cfg.seed)), norm)
    for i in range(n_iterations):
        if gamma == 0.0 or i == 0:
            boot = np.zeros(len(d))  # Q_0 is identically zero
        else:
            boot = q.values(d.next_states, pi_next)
        targets = d.rewards + gamma * boot
        if np.mean(np.abs(targets)) > guard:
            raise FqeDiverged(f"iteration {i}: mean |target| exceeded {guard:.3g}")
        fit(q.net, x, targets[:, None], epochs_per_iteration, cfg.batch_size,
            cfg.learning_rate, cfg.seed + 1 + i)
    return q


def true_return(pi: Policy, s0, gamma: float, max_steps: int, cfg: EnvConfig) -> float:
    arr = s0.as_array() if hasattr(s0, "as_array") else np.asarray(s0, dtype=np.float64)
    return float(true_return_batch(pi, arr[None, :], gamma, max_steps, cfg)[0])


def true_return_batch(pi: Policy, starts: np.ndarray, gamma: float, max_steps: int,
                      cfg: EnvConfig) -> np.ndarray:
    """Discounted return on the true environment from each exact start state."""
    returns, _, _ = env_mod.run_episodes_batch(
        pi, starts.shape[0], 0, max_steps, gamma, cfg, starts=starts
    )
    return returns


def fit_mbro(states: np.ndarray, pi: Policy, targets: np.ndarray,
             cfg: TrainConfig, hidden: int = 64) -> QFunction:
    """Regress a value net of the Q layout onto rollout value estimates.

    Inputs are (state, pi(state)); an internal 70:30 split drives early
    stopping per cfg.
    """
    states = np.asarray(states, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if states.shape[0] == 0:
        raise ValueError("no fit targets")
    actions = pi.act_batch(states)
    x = np.concatenate([states, actions[:, None].astype(np.float64)], axis=1)
    norm = Normalizer.from_data(x)
    xn = norm.normalize(x)
    y = targets[:, None]

    perm = np.random.default_rng(cfg.seed).permutation(states.shape[0])
    cut = max(1, int(round(0.7 * states.shape[0])))
    if cut == states.shape[0]:
        cut -= 1
    tr, va = perm[:cut], perm[cut:]
    net = Mlp.init([5, hidden, 1], np.random.default_rng(cfg.seed + 7))
    result = train(net, xn[tr], y[tr], xn[va], y[va], cfg)
    return QFunction(result.best_params, norm)


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    """Pearson correlation; None when either side has zero variance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sa, sb = a.std(), b.std()
    if sa < 1e-15 or sb < 1e-15:
        return None
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


ESTIMATORS = ("mbro", "fitted_mbro", "fqe")


@dataclass
class SeedEstimates:
    """One seed's trained estimators for the shared evaluation states."""

    seed: int
    model: DynamicsModel
    q_fqe: QFunction
    q_fitted: QFunction


@dataclass
class ValueReport:
    start_states: np.ndarray
    true_returns: np.ndarray
    per_seed: dict = field(default_factory=dict)   # seed -> estimator -> (N,) estimates
    summary: dict = field(default_factory=dict)    # estimator -> metric -> (mean, stderr)

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(VALUE_CSV_HEADER)
            for seed, est in sorted(self.per_seed.items()):
                for i in range(self.start_states.shape[0]):
                    writer.writerow(
                        [seed] + [repr(float(v)) for v in self.start_states[i]]
                        + [repr(float(self.true_returns[i]))]
                        + [repr(float(est[name][i])) for name in ESTIMATORS]
                    )

    def save_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")


VALUE_CSV_HEADER = ["seed", "x", "xdot", "theta", "thetadot",
                    "true_return", "v_mbro", "v_fitted_mbro", "v_fqe"]


def _mean_stderr(values) -> tuple:
    vals = np.array([v for v in values if v is not None], dtype=np.float64)
    if vals.size == 0:
        return None, None
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return mean, stderr


def evaluate_estimators(start_states: np.ndarray, pi: Policy, runs: list,
                        gamma: float, k_horizon: int, env_cfg: EnvConfig,
                        max_steps: int = 5000) -> ValueReport:
    """Compare MBRO, fitted MBRO and FQE against the true return per seed."""
    if len(runs) < 2:
        raise ValueError("need >= 2 seeds for standard errors")
    start_states = np.asarray(start_states, dtype=np.float64)
    truths = true_return_batch(pi, start_states, gamma, max_steps, env_cfg)
    report = ValueReport(start_states, truths)

    for run in runs:
        estimates = {
            "mbro": value_mb_batch(run.model, start_states, pi, gamma, k_horizon,
                                   terminate=True, cfg=env_cfg),
            "fitted_mbro": value_mf_batch(run.q_fitted, start_states, pi),
            "fqe": value_mf_batch(run.q_fqe, start_states, pi),
        }
        report.per_seed[run.seed] = estimates

    for name in ESTIMATORS:
        rmses = [rmse(report.per_seed[r.seed][name], truths) for r in runs]
        corrs = [pearson(report.per_seed[r.seed][name], truths) for r in runs]
        r_mean, r_se = _mean_stderr(rmses)
        c_mean, c_se = _mean_stderr(corrs)
        report.summary[name] = {
            "rmse_mean": r_mean, "rmse_stderr": r_se,
            "correlation_mean": c_mean, "correlation_stderr": c_se,
        }
    return report
