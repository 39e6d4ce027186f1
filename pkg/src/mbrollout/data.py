"""Offline dataset generation (random policy), CSV persistence, splitting."""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import env as env_mod
from .env import EnvConfig

CSV_HEADER = ["x", "xdot", "theta", "thetadot", "action",
              "x'", "xdot'", "theta'", "thetadot'", "reward"]


class DatasetIntegrityError(RuntimeError):
    """Stored file does not match its recorded content hash."""


class DatasetParseError(RuntimeError):
    """Malformed dataset file; message names the offending line."""


@dataclass(frozen=True)
class ObservationTuple:
    s: np.ndarray
    a: int
    s_next: np.ndarray
    r: float


@dataclass
class Dataset:
    """Ordered offline observation tuples plus generation metadata.

    Columns are stored as arrays: states (N,4), actions (N,), next_states
    (N,4), rewards (N,). Row i corresponds to one ObservationTuple.
    """

    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    rewards: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.states.shape[0]

    def row(self, i: int) -> ObservationTuple:
        return ObservationTuple(self.states[i].copy(), int(self.actions[i]),
                                self.next_states[i].copy(), float(self.rewards[i]))


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    validation: np.ndarray


def generate_dataset(n_tuples: int, seed: int, cfg: EnvConfig) -> Dataset:
    """Collect n_tuples transitions under the uniform-random policy.

    Episodes run until natural termination and restart from a fresh reset;
    the final episode may be cut off mid-flight once n_tuples is reached.
    """
    if n_tuples < 1:
        raise ValueError("n_tuples must be >= 1")
    rng = np.random.default_rng(seed)
    states = np.empty((n_tuples, 4))
    actions = np.empty(n_tuples, dtype=np.int64)
    next_states = np.empty((n_tuples, 4))

    filled = 0
    s = rng.uniform(-cfg.init_range, cfg.init_range, size=4)
    while filled < n_tuples:
        a = int(rng.integers(0, 2))
        s_next = env_mod.physics_step_batch(s[None, :], np.array([a]), cfg)[0]
        states[filled] = s
        actions[filled] = a
        next_states[filled] = s_next
        filled += 1
        if env_mod.is_terminal_batch(s_next[None, :], cfg)[0]:
            s = rng.uniform(-cfg.init_range, cfg.init_range, size=4)
        else:
            s = s_next
    rewards = env_mod.reward_batch(next_states, cfg)
    metadata = {
        "seed": seed,
        "policy": "uniform-random",
        "n_tuples": n_tuples,
        "env_config_hash": cfg.digest(),
    }
    return Dataset(states, actions, next_states, rewards, metadata)


def split_dataset(d: Dataset, ratio: float, seed: int) -> Split:
    """Seeded uniform shuffle partitioned at round(ratio * N)."""
    if not (0.0 < ratio < 1.0):
        raise ValueError("ratio must be in (0, 1)")
    n = len(d)
    cut = int(round(ratio * n))
    if cut == 0 or cut == n:
        raise ValueError(f"split ratio {ratio} leaves an empty side for N={n}")
    perm = np.random.default_rng(seed).permutation(n)
    return Split(train=np.sort(perm[:cut]), validation=np.sort(perm[cut:]))


def _sidecar_path(path) -> str:
    return str(path) + ".meta.json"


def save_dataset(d: Dataset, path) -> None:
    """Write CSV rows plus a JSON sidecar carrying metadata and a content hash."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for i in range(len(d)):
            writer.writerow(
                [repr(float(v)) for v in d.states[i]]
                + [int(d.actions[i])]
                + [repr(float(v)) for v in d.next_states[i]]
                + [repr(float(d.rewards[i]))]
            )
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    meta = dict(d.metadata)
    meta["content_sha256"] = digest
    with open(_sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path) -> Dataset:
    """Load a dataset, verifying the sidecar content hash."""
    with open(_sidecar_path(path)) as fh:
        meta = json.load(fh)
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    if digest != meta.get("content_sha256"):
        raise DatasetIntegrityError(f"{path}: content hash mismatch with sidecar")

    states, actions, next_states, rewards = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetParseError(f"{path}:1: empty file") from None
        if header != CSV_HEADER:
            raise DatasetParseError(f"{path}:1: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 10:
                raise DatasetParseError(f"{path}:{lineno}: expected 10 fields, got {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise DatasetParseError(f"{path}:{lineno}: {exc}") from None
            states.append(vals[0:4])
            actions.append(int(vals[4]))
            next_states.append(vals[5:9])
            rewards.append(vals[9])
    if not states:
        raise DatasetParseError(f"{path}: no data rows")
    meta.pop("content_sha256", None)
    return Dataset(np.array(states), np.array(actions, dtype=np.int64),
                   np.array(next_states), np.array(rewards), meta)


def verify_rewards(d: Dataset, cfg: EnvConfig, tol: float = 1e-12) -> int:
    """Recompute rewards from successor states; warn and count mismatched rows."""
    expected = env_mod.reward_batch(d.next_states, cfg)
    bad = int(np.sum(np.abs(expected - d.rewards) > tol))
    if bad:
        warnings.warn(f"{bad} rows have rewards inconsistent with their successor state")
    return bad
