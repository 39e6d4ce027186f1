"""Offline cart-pole workbench: model-based rollouts vs. bootstrapped Q-values."""

from .env import EnvConfig, State
from .data import Dataset, generate_dataset, load_dataset, save_dataset, split_dataset
from .model import DynamicsModel, train_dynamics
from .neural import Mlp, TrainConfig
from .rollout import (FixedActionPolicy, LinearBalancingPolicy, Policy,
                      RandomPolicy, Rollout, rollout_blind, rollout_informed,
                      value_mb)
from .valuation import QFunction, evaluate_estimators, fit_mbro, fqe, true_return
from .learner import GreedyPolicy, LearningRun, bsf_nfq, evaluate_policy, nfq

__all__ = [
    "EnvConfig", "State", "Dataset", "generate_dataset", "load_dataset",
    "save_dataset", "split_dataset", "DynamicsModel", "train_dynamics", "Mlp",
    "TrainConfig", "Policy", "RandomPolicy", "LinearBalancingPolicy",
    "FixedActionPolicy", "Rollout", "rollout_blind", "rollout_informed",
    "value_mb", "QFunction", "fqe", "true_return", "fit_mbro",
    "evaluate_estimators", "GreedyPolicy", "LearningRun", "nfq", "bsf_nfq",
    "evaluate_policy",
]
