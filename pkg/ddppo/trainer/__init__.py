"""DD-PPO training loop."""

from .ddppo import DDPPOWorker
from .ppo import PPO, make_env_config, make_net_spec, make_rngs
from .stats import IterationStats
from .train import (
    TrainResult,
    checkpoint_path,
    connect,
    make_worker,
    split_maps,
    train,
    train_maps,
)
from .transfer import load_pretrained

__all__ = [
    "DDPPOWorker",
    "IterationStats",
    "PPO",
    "TrainResult",
    "checkpoint_path",
    "connect",
    "load_pretrained",
    "make_env_config",
    "make_net_spec",
    "make_rngs",
    "make_worker",
    "split_maps",
    "train",
    "train_maps",
]
