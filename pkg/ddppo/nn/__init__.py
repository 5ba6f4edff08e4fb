"""Policy/value network with hand-written backward pass and Adam."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .distributions import sample_action, sample_actions, greedy_actions
from .loss import LossConfig, LossStats, clipped_surrogate, log_softmax, loss_and_grad
from .net import (
    NetSpec,
    ParamVector,
    PolicyOutput,
    forward,
    forward_batch,
    init_params,
    reinit_critic,
    reinit_heads,
)
from .optim import AdamState, FreezeMask, adam_step

__all__ = [
    "AdamState",
    "Checkpoint",
    "FreezeMask",
    "LossConfig",
    "LossStats",
    "NetSpec",
    "ParamVector",
    "PolicyOutput",
    "adam_step",
    "clipped_surrogate",
    "forward",
    "forward_batch",
    "greedy_actions",
    "init_params",
    "load_checkpoint",
    "log_softmax",
    "loss_and_grad",
    "reinit_critic",
    "reinit_heads",
    "sample_action",
    "sample_actions",
    "save_checkpoint",
]
