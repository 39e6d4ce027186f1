"""Deterministic cart-pole simulator with a quadratic center-seeking reward.

All dynamics are pure functions over value types; batch variants operate on
(N, 4) float64 arrays and are the single source of truth (scalar wrappers
route through them, so scalar and batch results are bit-identical).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields

import numpy as np

ACTION_LEFT = 0
ACTION_RIGHT = 1


@dataclass(frozen=True)
class State:
    """One cart-pole state: position, velocity, pole angle, angular velocity."""

    x: float
    x_dot: float
    theta: float
    theta_dot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot], dtype=np.float64)

    @staticmethod
    def from_array(arr) -> "State":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != (4,):
            raise ValueError(f"state array must have shape (4,), got {arr.shape}")
        return State(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))


@dataclass(frozen=True)
class EnvConfig:
    """Physics and termination constants (defaults match the standard cart-pole)."""

    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    pole_half_length: float = 0.5
    force_magnitude: float = 10.0
    time_step: float = 0.02
    x_limit: float = 2.4
    theta_limit: float = 0.2095
    init_range: float = 0.05

    def save(self, path) -> None:
        lines = [f"{f.name} = {getattr(self, f.name)!r}\n" for f in fields(self)]
        with open(path, "w") as fh:
            fh.writelines(lines)

    @staticmethod
    def load(path) -> "EnvConfig":
        values = {}
        names = {f.name for f in fields(EnvConfig)}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in names:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = float(val)
        return EnvConfig(**values)

    def digest(self) -> str:
        payload = ",".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))
        return hashlib.sha256(payload.encode()).hexdigest()


def physics_step_batch(states: np.ndarray, actions: np.ndarray, cfg: EnvConfig) -> np.ndarray:
    """One explicit-Euler step of the cart-pole equations for a batch of states.

    Positions are advanced with the pre-update velocities, matching the
    reference discrete-time dynamics.
    """
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions)
    x, x_dot, theta, theta_dot = states[:, 0], states[:, 1], states[:, 2], states[:, 3]

    force = np.where(actions == ACTION_RIGHT, cfg.force_magnitude, -cfg.force_magnitude)
    total_mass = cfg.cart_mass + cfg.pole_mass
    polemass_length = cfg.pole_mass * cfg.pole_half_length

    sin_t = np.sin(theta)
    cos_t = np.cos(theta)
    temp = (force + polemass_length * theta_dot**2 * sin_t) / total_mass
    theta_acc = (cfg.gravity * sin_t - cos_t * temp) / (
        cfg.pole_half_length * (4.0 / 3.0 - cfg.pole_mass * cos_t**2 / total_mass)
    )
    x_acc = temp - polemass_length * theta_acc * cos_t / total_mass

    out = np.empty_like(states)
    out[:, 0] = x + cfg.time_step * x_dot
    out[:, 1] = x_dot + cfg.time_step * x_acc
    out[:, 2] = theta + cfg.time_step * theta_dot
    out[:, 3] = theta_dot + cfg.time_step * theta_acc
    return out


def physics_step(s: State, a: int, cfg: EnvConfig) -> State:
    nxt = physics_step_batch(s.as_array()[None, :], np.array([a]), cfg)
    return State.from_array(nxt[0])


def is_terminal_batch(states: np.ndarray, cfg: EnvConfig) -> np.ndarray:
    states = np.asarray(states, dtype=np.float64)
    return (np.abs(states[:, 0]) > cfg.x_limit) | (np.abs(states[:, 2]) > cfg.theta_limit)


def is_terminal(s: State, cfg: EnvConfig) -> bool:
    return bool(is_terminal_batch(s.as_array()[None, :], cfg)[0])


def reward_batch(next_states: np.ndarray, cfg: EnvConfig) -> np.ndarray:
    """Quadratic reward on the successor state: 1 at center, 0 at both bounds."""
    next_states = np.asarray(next_states, dtype=np.float64)
    x = next_states[:, 0]
    theta = next_states[:, 2]
    return (1.0 - (x / cfg.x_limit) ** 2 + 1.0 - (theta / cfg.theta_limit) ** 2) / 2.0


def reward(s_next: State, cfg: EnvConfig) -> float:
    return float(reward_batch(s_next.as_array()[None, :], cfg)[0])


def reset(seed: int, cfg: EnvConfig) -> State:
    rng = np.random.default_rng(seed)
    return State.from_array(rng.uniform(-cfg.init_range, cfg.init_range, size=4))


def reset_batch(n: int, seed: int, cfg: EnvConfig) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-cfg.init_range, cfg.init_range, size=(n, 4))


@dataclass(frozen=True)
class EpisodeResult:
    discounted_return: float
    steps: int
    reached_max_steps: bool


def run_episode(policy, seed: int, max_steps: int, gamma: float, cfg: EnvConfig) -> EpisodeResult:
    """Roll the true environment under `policy` until termination or max_steps."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if not (0.0 < gamma <= 1.0):
        raise ValueError("gamma must be in (0, 1]")
    s = reset(seed, cfg).as_array()
    total = 0.0
    disc = 1.0
    steps = 0
    for _ in range(max_steps):
        a = policy.act(s)
        s = physics_step_batch(s[None, :], np.array([a]), cfg)[0]
        total += disc * reward_batch(s[None, :], cfg)[0]
        disc *= gamma
        steps += 1
        if is_terminal_batch(s[None, :], cfg)[0]:
            break
    return EpisodeResult(float(total), steps, steps == max_steps and not is_terminal_batch(s[None, :], cfg)[0])


def run_episodes_batch(policy, n_episodes: int, seed: int, max_steps: int, gamma: float,
                       cfg: EnvConfig, starts: np.ndarray | None = None):
    """Run many true-environment episodes in lockstep.

    Returns (discounted_returns (N,), step_counts (N,), reached_max (N,) bool).
    Episodes share one seeded initial-state draw; dynamics are deterministic.
    """
    if starts is None:
        s = reset_batch(n_episodes, seed, cfg)
    else:
        s = np.asarray(starts, dtype=np.float64).copy()
        n_episodes = s.shape[0]
    returns = np.zeros(n_episodes)
    steps = np.zeros(n_episodes, dtype=np.int64)
    disc = 1.0
    active = ~is_terminal_batch(s, cfg)
    for _ in range(max_steps):
        if not active.any():
            break
        a = policy.act_batch(s)
        s_next = physics_step_batch(s, a, cfg)
        r = reward_batch(s_next, cfg)
        returns[active] += disc * r[active]
        steps[active] += 1
        s = np.where(active[:, None], s_next, s)
        disc *= gamma
        active &= ~is_terminal_batch(s, cfg)
    reached_max = (steps == max_steps) & ~is_terminal_batch(s, cfg)
    return returns, steps, reached_max


def mean_random_episode_length(n_episodes: int, seed: int, cfg: EnvConfig,
                               max_steps: int = 10_000) -> float:
    """Empirical mean episode length under the uniform-random policy."""
    from .rollout import RandomPolicy

    policy = RandomPolicy(seed=seed + 1)
    _, steps, _ = run_episodes_batch(policy, n_episodes, seed, max_steps, 1.0, cfg)
    return float(steps.mean())


def _sign_flip_check(s: State, a: int, cfg: EnvConfig) -> bool:
    """Mirror symmetry: negating the state and flipping the action negates the successor."""
    left = physics_step(s, a, cfg)
    mirrored = State(-s.x, -s.x_dot, -s.theta, -s.theta_dot)
    right = physics_step(mirrored, 1 - a, cfg)
    return all(
        math.isclose(getattr(left, f.name), -getattr(right, f.name), abs_tol=1e-12)
        for f in fields(State)
    )
