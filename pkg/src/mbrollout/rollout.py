"""Blind and informed model rollouts, divergence profiles, rollout values."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import env as env_mod
from .env import EnvConfig
from .model import DynamicsModel, predict_next_batch, predict_reward_batch


class Policy:
    """State-feedback policy. Subclasses implement act_batch on (N, 4) arrays."""

    def act_batch(self, states: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def act(self, state) -> int:
        arr = state.as_array() if hasattr(state, "as_array") else np.asarray(state, dtype=np.float64)
        return int(self.act_batch(arr[None, :])[0])


class RandomPolicy(Policy):
    """Uniform-random actions from a seeded stream."""

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed)

    def act_batch(self, states):
        return self._rng.integers(0, 2, size=states.shape[0])


class LinearBalancingPolicy(Policy):
    """Hand-coded controller: push right when a linear state score is positive."""

    def __init__(self, weights=(0.3, 0.6, 6.0, 1.2)):
        self.weights = np.asarray(weights, dtype=np.float64)

    def act_batch(self, states):
        score = np.asarray(states, dtype=np.float64) @ self.weights
        return (score > 0.0).astype(np.int64)


class FixedActionPolicy(Policy):
    """Replays a fixed action sequence positionally, ignoring the state."""

    def __init__(self, actions):
        self.actions = np.asarray(actions, dtype=np.int64)
        self._cursor = 0

    def reset(self) -> None:
        self._cursor = 0

    def act_batch(self, states):
        a = self.actions[self._cursor]
        self._cursor += 1
        return np.full(states.shape[0], a, dtype=np.int64)


@dataclass
class Rollout:
    states: np.ndarray          # (K+1, 4); row 0 is the start state
    actions: np.ndarray         # (K,)
    rewards: np.ndarray         # (K,)
    truncated_at: int | None = None

    def __len__(self) -> int:
        return self.actions.shape[0]

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(ROLLOUT_CSV_HEADER)
            for k in range(len(self)):
                writer.writerow(
                    [k] + [repr(float(v)) for v in self.states[k]]
                    + [int(self.actions[k]), repr(float(self.rewards[k]))]
                )


ROLLOUT_CSV_HEADER = ["step", "x", "xdot", "theta", "thetadot", "action", "reward"]


def rollout_blind(m: DynamicsModel, s0, actions) -> Rollout:
    """Roll the model under a fixed action sequence (no state feedback)."""
    actions = np.asarray(actions, dtype=np.int64)
    if actions.size == 0:
        raise ValueError("action sequence must be non-empty")
    s0 = s0.as_array() if hasattr(s0, "as_array") else np.asarray(s0, dtype=np.float64)
    states = np.empty((actions.size + 1, 4))
    rewards = np.empty(actions.size)
    states[0] = s0
    for k, a in enumerate(actions):
        nxt = predict_next_batch(m, states[k][None, :], np.array([a]))[0]
        rewards[k] = predict_reward_batch(m, states[k][None, :], np.array([a]), nxt[None, :])[0]
        states[k + 1] = nxt
    return Rollout(states, actions.copy(), rewards)


def rollout_informed(m: DynamicsModel, s0, pi: Policy, k_max: int,
                     terminate: bool = False, cfg: EnvConfig | None = None) -> Rollout:
    """Roll the model under a state-feedback policy for up to k_max steps."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if terminate and cfg is None:
        raise ValueError("terminate=True requires an EnvConfig")
    s0 = s0.as_array() if hasattr(s0, "as_array") else np.asarray(s0, dtype=np.float64)
    states = [np.asarray(s0, dtype=np.float64)]
    actions, rewards = [], []
    truncated_at = None
    for k in range(k_max):
        cur = states[-1]
        if terminate and env_mod.is_terminal_batch(cur[None, :], cfg)[0]:
            truncated_at = k
            break
        a = int(pi.act_batch(cur[None, :])[0])
        nxt = predict_next_batch(m, cur[None, :], np.array([a]))[0]
        rewards.append(float(predict_reward_batch(m, cur[None, :], np.array([a]), nxt[None, :])[0]))
        actions.append(a)
        states.append(nxt)
    return Rollout(np.array(states), np.array(actions, dtype=np.int64),
                   np.array(rewards), truncated_at)


def rollout_true(s0, pi: Policy, k_max: int, cfg: EnvConfig,
                 terminate: bool = False) -> Rollout:
    """Same stepping protocol as rollout_informed but on the true dynamics."""
    s0 = s0.as_array() if hasattr(s0, "as_array") else np.asarray(s0, dtype=np.float64)
    states = [np.asarray(s0, dtype=np.float64)]
    actions, rewards = [], []
    truncated_at = None
    for k in range(k_max):
        cur = states[-1]
        if terminate and env_mod.is_terminal_batch(cur[None, :], cfg)[0]:
            truncated_at = k
            break
        a = int(pi.act_batch(cur[None, :])[0])
        nxt = env_mod.physics_step_batch(cur[None, :], np.array([a]), cfg)[0]
        rewards.append(float(env_mod.reward_batch(nxt[None, :], cfg)[0]))
        actions.append(a)
        states.append(nxt)
    return Rollout(np.array(states), np.array(actions, dtype=np.int64),
                   np.array(rewards), truncated_at)


def value_mb_batch(m: DynamicsModel, starts: np.ndarray, pi: Policy, gamma: float,
                   k_horizon: int, terminate: bool = True,
                   cfg: EnvConfig | None = None) -> np.ndarray:
    """Discounted model-rollout return for each start state.

    Sums gamma^k * R(s_k, pi(s_k), s_{k+1}) over up to k_horizon steps.
    With terminate=True, a trajectory stops contributing once its simulated
    state violates the termination bounds; a terminal start is worth 0.
    """
    if k_horizon < 1:
        raise ValueError("k_horizon must be >= 1")
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must be in (0, 1]")
    if terminate and cfg is None:
        raise ValueError("terminate=True requires an EnvConfig")
    s = np.asarray(starts, dtype=np.float64).copy()
    n = s.shape[0]
    values = np.zeros(n)
    disc = 1.0
    active = ~env_mod.is_terminal_batch(s, cfg) if terminate else np.ones(n, dtype=bool)
    for _ in range(k_horizon):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        sa = s[idx]
        a = pi.act_batch(sa)
        nxt = predict_next_batch(m, sa, a)
        r = predict_reward_batch(m, sa, a, nxt)
        values[idx] += disc * r
        s[idx] = nxt
        disc *= gamma
        if terminate:
            active[idx] = ~env_mod.is_terminal_batch(nxt, cfg)
    return values


def value_mb(m: DynamicsModel, s0, pi: Policy, gamma: float, k_horizon: int,
             terminate: bool = True, cfg: EnvConfig | None = None) -> float:
    s0 = s0.as_array() if hasattr(s0, "as_array") else np.asarray(s0, dtype=np.float64)
    return float(value_mb_batch(m, s0[None, :], pi, gamma, k_horizon, terminate, cfg)[0])


def divergence_profile(true_traj: Rollout, model_traj: Rollout,
                       scale: np.ndarray | None = None) -> np.ndarray:
    """Per-step Euclidean distance between two trajectories in scaled state space.

    `scale` divides each state variable before the distance is taken; by
    default the per-variable standard deviation of the true trajectory is
    used so that meters and radians contribute comparably.
    """
    if not np.array_equal(true_traj.states[0], model_traj.states[0]):
        raise ValueError("trajectories must share the same start state")
    n = min(true_traj.states.shape[0], model_traj.states.shape[0])
    if scale is None:
        scale = true_traj.states.std(axis=0)
        scale = np.where(scale < 1e-8, 1.0, scale)
    diff = (true_traj.states[:n] - model_traj.states[:n]) / np.asarray(scale, dtype=np.float64)
    return np.sqrt((diff**2).sum(axis=1))
