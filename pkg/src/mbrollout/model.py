"""Learned cart-pole simulator: four delta sub-models plus a reward model.

Each sub-model is a 5-16-1 network predicting the change of one state
variable from (state, action); the reward model is 9-16-1 over
(state, action, next state). Inputs and targets are z-score normalized with
statistics taken from the training split.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Split
from .neural import Mlp, TrainConfig, TrainResult, train, forward

STATE_VARS = ("x", "x_dot", "theta", "theta_dot")
QUALITY_TIERS = ("epoch1", "epoch10", "epoch100", "best")
_TIER_EPOCH = {"epoch1": 1, "epoch10": 10, "epoch100": 100}


@dataclass
class Normalizer:
    """Per-feature z-score transform; zero-variance features pass through."""

    mean: np.ndarray
    std: np.ndarray

    @staticmethod
    def from_data(x: np.ndarray) -> "Normalizer":
        x = np.asarray(x, dtype=np.float64)
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return Normalizer(mean, std)

    @staticmethod
    def identity(width: int) -> "Normalizer":
        return Normalizer(np.zeros(width), np.ones(width))

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean


@dataclass
class DynamicsModel:
    sub_models: dict            # state variable -> Mlp (5-16-1)
    reward_model: Mlp           # 9-16-1
    input_norm: Normalizer      # 5 features: state + action
    delta_norms: dict           # state variable -> scalar Normalizer
    reward_input_norm: Normalizer  # 9 features: state + action + next state
    reward_norm: Normalizer     # scalar
    tier: str = "best"

    @staticmethod
    def zero_delta(hidden: int = 16, reward_constant: float = 0.0) -> "DynamicsModel":
        """Identity transition model with a constant reward; used in tests."""
        subs = {v: Mlp.zeros([5, hidden, 1]) for v in STATE_VARS}
        return DynamicsModel(
            sub_models=subs,
            reward_model=Mlp.zeros([9, hidden, 1]),
            input_norm=Normalizer.identity(5),
            delta_norms={v: Normalizer.identity(1) for v in STATE_VARS},
            reward_input_norm=Normalizer.identity(9),
            reward_norm=Normalizer(np.array([reward_constant]), np.array([1.0])),
        )


def predict_next_batch(m: DynamicsModel, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    states = np.asarray(states, dtype=np.float64)
    x = np.concatenate([states, np.asarray(actions, dtype=np.float64)[:, None]], axis=1)
    xn = m.input_norm.normalize(x)
    out = states.copy()
    for i, var in enumerate(STATE_VARS):
        delta = forward(m.sub_models[var], xn)[:, 0]
        out[:, i] += m.delta_norms[var].denormalize(delta[:, None])[:, 0]
    return out


def predict_next(m: DynamicsModel, s, a: int):
    from .env import State

    arr = s.as_array() if isinstance(s, State) else np.asarray(s, dtype=np.float64)
    nxt = predict_next_batch(m, arr[None, :], np.array([a]))[0]
    return State.from_array(nxt) if isinstance(s, State) else nxt


def predict_reward_batch(m: DynamicsModel, states, actions, next_states) -> np.ndarray:
    states = np.asarray(states, dtype=np.float64)
    next_states = np.asarray(next_states, dtype=np.float64)
    x = np.concatenate(
        [states, np.asarray(actions, dtype=np.float64)[:, None], next_states], axis=1
    )
    xn = m.reward_input_norm.normalize(x)
    raw = forward(m.reward_model, xn)
    return m.reward_norm.denormalize(raw)[:, 0]


def predict_reward(m: DynamicsModel, s, a: int, s_next) -> float:
    from .env import State

    sa = s.as_array() if isinstance(s, State) else np.asarray(s, dtype=np.float64)
    sn = s_next.as_array() if isinstance(s_next, State) else np.asarray(s_next, dtype=np.float64)
    return float(predict_reward_batch(m, sa[None, :], np.array([a]), sn[None, :])[0])


@dataclass
class DynamicsTrainReport:
    """Training records per sub-model plus one-step validation errors per tier."""

    sub_results: dict = field(default_factory=dict)      # var -> TrainResult
    reward_result: TrainResult | None = None
    tier_val_mse: dict = field(default_factory=dict)     # tier -> var -> val MSE (normalized)


def _tier_params(result: TrainResult, tier: str) -> Mlp:
    if tier == "best":
        return result.best_params
    epoch = _TIER_EPOCH[tier]
    if epoch in result.checkpoints:
        return result.checkpoints[epoch]
    # training stopped before this checkpoint; the best params are the
    # closest thing to "trained at least that long"
    return result.best_params


def train_dynamics(d: Dataset, split: Split, cfg: TrainConfig, hidden: int = 16):
    """Train the four delta sub-models and the reward model.

    Returns (tier -> DynamicsModel, DynamicsTrainReport). Tiers share one
    training run per sub-model and differ only in which checkpoint they use.
    """
    tr, va = split.train, split.validation
    x_all = np.concatenate([d.states, d.actions[:, None].astype(np.float64)], axis=1)
    input_norm = Normalizer.from_data(x_all[tr])
    xn = input_norm.normalize(x_all)

    report = DynamicsTrainReport()
    sub_params = {}
    delta_norms = {}
    for i, var in enumerate(STATE_VARS):
        target = (d.next_states[:, i] - d.states[:, i])[:, None]
        norm = Normalizer.from_data(target[tr])
        delta_norms[var] = norm
        tn = norm.normalize(target)
        sub_cfg = TrainConfig(
            learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
            patience_epochs=cfg.patience_epochs, max_epochs=cfg.max_epochs,
            checkpoint_epochs=cfg.checkpoint_epochs, seed=cfg.seed + 1 + i,
        )
        net = Mlp.init([5, hidden, 1], np.random.default_rng(sub_cfg.seed))
        result = train(net, xn[tr], tn[tr], xn[va], tn[va], sub_cfg)
        report.sub_results[var] = result
        sub_params[var] = result

    rx_all = np.concatenate(
        [d.states, d.actions[:, None].astype(np.float64), d.next_states], axis=1
    )
    reward_input_norm = Normalizer.from_data(rx_all[tr])
    rxn = reward_input_norm.normalize(rx_all)
    r_all = d.rewards[:, None]
    reward_norm = Normalizer.from_data(r_all[tr])
    rn = reward_norm.normalize(r_all)
    r_cfg = TrainConfig(
        learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
        patience_epochs=cfg.patience_epochs, max_epochs=cfg.max_epochs,
        checkpoint_epochs=cfg.checkpoint_epochs, seed=cfg.seed + 100,
    )
    r_net = Mlp.init([9, hidden, 1], np.random.default_rng(r_cfg.seed))
    r_result = train(r_net, rxn[tr], rn[tr], rxn[va], rn[va], r_cfg)
    report.reward_result = r_result

    from .neural import mse_loss

    tiers = {}
    for tier in QUALITY_TIERS:
        tiers[tier] = DynamicsModel(
            sub_models={v: _tier_params(sub_params[v], tier).copy() for v in STATE_VARS},
            reward_model=_tier_params(r_result, tier).copy(),
            input_norm=input_norm,
            delta_norms=delta_norms,
            reward_input_norm=reward_input_norm,
            reward_norm=reward_norm,
            tier=tier,
        )
        report.tier_val_mse[tier] = {}
        for i, var in enumerate(STATE_VARS):
            target = (d.next_states[:, i] - d.states[:, i])[:, None]
            tn = delta_norms[var].normalize(target)
            report.tier_val_mse[tier][var] = mse_loss(
                tiers[tier].sub_models[var], xn[va], tn[va]
            )
    return tiers, report


def _norm_to_json(norm: Normalizer) -> dict:
    return {"mean": [v.hex() for v in norm.mean], "std": [v.hex() for v in norm.std]}


def _norm_from_json(blob: dict) -> Normalizer:
    return Normalizer(
        np.array([float.fromhex(h) for h in blob["mean"]]),
        np.array([float.fromhex(h) for h in blob["std"]]),
    )


def save_model(m: DynamicsModel, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for var, net in m.sub_models.items():
        net.save(os.path.join(directory, f"sub_{var}.json"))
    m.reward_model.save(os.path.join(directory, "reward.json"))
    manifest = {
        "tier": m.tier,
        "state_vars": list(STATE_VARS),
        "input_norm": _norm_to_json(m.input_norm),
        "delta_norms": {v: _norm_to_json(n) for v, n in m.delta_norms.items()},
        "reward_input_norm": _norm_to_json(m.reward_input_norm),
        "reward_norm": _norm_to_json(m.reward_norm),
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(directory) -> DynamicsModel:
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    subs = {v: Mlp.load(os.path.join(directory, f"sub_{v}.json")) for v in manifest["state_vars"]}
    return DynamicsModel(
        sub_models=subs,
        reward_model=Mlp.load(os.path.join(directory, "reward.json")),
        input_norm=_norm_from_json(manifest["input_norm"]),
        delta_norms={v: _norm_from_json(b) for v, b in manifest["delta_norms"].items()},
        reward_input_norm=_norm_from_json(manifest["reward_input_norm"]),
        reward_norm=_norm_from_json(manifest["reward_norm"]),
        tier=manifest["tier"],
    )
