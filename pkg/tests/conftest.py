import numpy as np
import pytest

from mbrollout.data import generate_dataset, split_dataset
from mbrollout.env import EnvConfig
from mbrollout.model import train_dynamics
from mbrollout.neural import TrainConfig


@pytest.fixture(scope="session")
def env_cfg():
    return EnvConfig()


@pytest.fixture(scope="session")
def dataset_small(env_cfg):
    return generate_dataset(4000, seed=3, cfg=env_cfg)


@pytest.fixture(scope="session")
def split_small(dataset_small):
    return split_dataset(dataset_small, 0.7, seed=4)


@pytest.fixture(scope="session")
def tiers_small(dataset_small, split_small):
    """Quality-tier models trained on the small dataset; shared across tests."""
    cfg = TrainConfig(learning_rate=0.01, batch_size=100, patience_epochs=100,
                      max_epochs=150, checkpoint_epochs=(1, 10, 100), seed=10)
    tiers, report = train_dynamics(dataset_small, split_small, cfg)
    return tiers, report


@pytest.fixture(scope="session")
def model_small(tiers_small):
    return tiers_small[0]["best"]
