"""Experiment configuration: presets, INI-style round-tripping."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .env import EnvConfig
from .learner import EvalConfig
from .neural import TrainConfig


@dataclass
class ValueEvalConfig:
    gamma: float = 0.99
    k_horizon: int = 1000
    n_start_states: int = 200
    true_max_steps: int = 5000
    fqe_iterations: int = 200
    fqe_epochs_per_iteration: int = 2
    seeds: tuple = (0, 1, 2)


@dataclass
class LearnConfig:
    nfq_iterations: int = 100
    bsf_iterations: int = 20
    bsf_k_horizon: int = 200
    fit_epochs: int = 300
    seeds: tuple = (0, 1, 2)


@dataclass
class ExperimentConfig:
    preset: str = "desk"
    env: EnvConfig = field(default_factory=EnvConfig)
    n_tuples: int = 20000
    data_seed: int = 1
    split_ratio: float = 0.7
    split_seed: int = 2
    dynamics_train: TrainConfig = field(default_factory=lambda: TrainConfig(
        learning_rate=0.01, batch_size=100, patience_epochs=100, max_epochs=300,
        checkpoint_epochs=(1, 10, 100), seed=10))
    q_train: TrainConfig = field(default_factory=lambda: TrainConfig(
        learning_rate=0.01, batch_size=100, patience_epochs=50, max_epochs=300,
        checkpoint_epochs=(), seed=20))
    value: ValueEvalConfig = field(default_factory=ValueEvalConfig)
    learn: LearnConfig = field(default_factory=LearnConfig)
    policy_eval: EvalConfig = field(default_factory=EvalConfig)
    rollout_compare_steps: int = 200

    def with_seed_offset(self, offset: int) -> "ExperimentConfig":
        cfg = load_from_dict(as_dict(self))
        cfg.data_seed += offset
        cfg.split_seed += offset
        cfg.dynamics_train.seed += offset
        cfg.q_train.seed += offset
        cfg.value.seeds = tuple(s + offset for s in cfg.value.seeds)
        cfg.learn.seeds = tuple(s + offset for s in cfg.learn.seeds)
        cfg.policy_eval.seed += offset
        return cfg


def desk_preset() -> ExperimentConfig:
    """Laptop-scale defaults: full dataset, scaled-down iteration counts."""
    return ExperimentConfig()


def paper_preset() -> ExperimentConfig:
    """Full-scale settings; expect multi-hour runtimes for the learning stage."""
    cfg = ExperimentConfig(preset="paper")
    cfg.dynamics_train.max_epochs = 2000
    cfg.value.n_start_states = 1000
    cfg.value.fqe_epochs_per_iteration = 5
    cfg.value.seeds = tuple(range(10))
    cfg.learn = LearnConfig(
        nfq_iterations=1000, bsf_iterations=100, bsf_k_horizon=1000,
        fit_epochs=300, seeds=tuple(range(10)),
    )
    cfg.policy_eval = EvalConfig(n_episodes=1000, max_steps=5000, gamma=0.99, seed=12345)
    return cfg


PRESETS = {"desk": desk_preset, "paper": paper_preset}

_SECTIONS = {
    "experiment": ("preset", "n_tuples", "data_seed", "split_ratio", "split_seed",
                   "rollout_compare_steps"),
    "env": None,
    "dynamics_train": None,
    "q_train": None,
    "value": None,
    "learn": None,
    "policy_eval": None,
}


def _obj_to_section(obj) -> dict:
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        out[f.name] = str(v)
    return out


def _section_to_kwargs(cls, section) -> dict:
    kwargs = {}
    for f in fields(cls):
        if f.name not in section:
            continue
        raw = section[f.name]
        tp = f.type if isinstance(f.type, type) else str(f.type)
        if tp in ("int", int):
            kwargs[f.name] = int(raw)
        elif tp in ("float", float):
            kwargs[f.name] = float(raw)
        elif tp in ("tuple", tuple):
            kwargs[f.name] = tuple(int(x) for x in raw.split(",") if x.strip() != "")
        else:
            kwargs[f.name] = raw
    return kwargs


def as_dict(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": {k: str(getattr(cfg, k)) for k in _SECTIONS["experiment"]},
        "env": _obj_to_section(cfg.env),
        "dynamics_train": _obj_to_section(cfg.dynamics_train),
        "q_train": _obj_to_section(cfg.q_train),
        "value": _obj_to_section(cfg.value),
        "learn": _obj_to_section(cfg.learn),
        "policy_eval": _obj_to_section(cfg.policy_eval),
    }


def load_from_dict(blob: dict) -> ExperimentConfig:
    exp = blob.get("experiment", {})
    cfg = ExperimentConfig(
        preset=exp.get("preset", "desk"),
        n_tuples=int(exp.get("n_tuples", 20000)),
        data_seed=int(exp.get("data_seed", 1)),
        split_ratio=float(exp.get("split_ratio", 0.7)),
        split_seed=int(exp.get("split_seed", 2)),
        rollout_compare_steps=int(exp.get("rollout_compare_steps", 200)),
        env=EnvConfig(**_section_to_kwargs(EnvConfig, blob.get("env", {}))),
        dynamics_train=TrainConfig(**_section_to_kwargs(TrainConfig, blob.get("dynamics_train", {}))),
        q_train=TrainConfig(**_section_to_kwargs(TrainConfig, blob.get("q_train", {}))),
        value=ValueEvalConfig(**_section_to_kwargs(ValueEvalConfig, blob.get("value", {}))),
        learn=LearnConfig(**_section_to_kwargs(LearnConfig, blob.get("learn", {}))),
        policy_eval=EvalConfig(**_section_to_kwargs(EvalConfig, blob.get("policy_eval", {}))),
    )
    return cfg


def save_config(cfg: ExperimentConfig, path) -> None:
    parser = configparser.ConfigParser()
    for name, section in as_dict(cfg).items():
        parser[name] = section
    with open(path, "w") as fh:
        parser.write(fh)


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    return load_from_dict({name: dict(parser[name]) for name in parser.sections()})
