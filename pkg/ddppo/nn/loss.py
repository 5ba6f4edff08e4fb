"""Clipped-surrogate PPO loss with an analytic gradient.

total = -J_clip + value_coef * value_loss - entropy_coef * entropy

with, averaged over the batch,

    J_clip     = mean(min(r * A, clip(r, 1 - eps, 1 + eps) * A)),  r = exp(logp - logp_old)
    value_loss = 0.5 * mean((V - R)^2)
    entropy    = mean(-sum_a p_a log p_a)

Advantages are used as given (no normalisation).
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Tuple

import numpy as np

from ..exceptions import NumericalError
from .net import ACTION_HEAD, VALUE_HEAD, NetSpec, ParamVector, forward_batch

if TYPE_CHECKING:
    from ..rollout import PpoBatch


@dataclass(frozen=True)
class LossConfig:
    clip_eps: float = 0.2
    value_coef: float = 0.5
    entropy_coef: float = 0.01


@dataclass(frozen=True)
class LossStats:
    total_loss: float
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float
    num_samples: int


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def clipped_surrogate(ratio: np.ndarray, advantages: np.ndarray, eps: float) -> np.ndarray:
    """Per-sample ``min(r * A, clip(r, 1-eps, 1+eps) * A)``."""

    return np.minimum(ratio * advantages, np.clip(ratio, 1.0 - eps, 1.0 + eps) * advantages)


def _finite(tensor_id: str, value: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise NumericalError(tensor_id)
    return value


# pylint: disable=too-many-locals
def loss_and_grad(
    spec: NetSpec, params: ParamVector, batch: "PpoBatch", loss_cfg: LossConfig
) -> Tuple[LossStats, np.ndarray]:
    """Loss statistics and the gradient of the total loss w.r.t. ``params``.

    Raises:
        NumericalError: an intermediate tensor contains NaN/inf.
    """

    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")

    cache = forward_batch(spec, params, batch.obs)
    assert cache.logits is not None and cache.values is not None
    logits = _finite("logits", cache.logits)
    values = _finite("values", cache.values)

    logp_all = log_softmax(logits)
    probs = np.exp(logp_all)
    rows = np.arange(n)
    actions = batch.actions.astype(np.int64)
    logp = logp_all[rows, actions]

    ratio = _finite("ratio", np.exp(logp - batch.old_log_probs))
    adv = batch.advantages
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - loss_cfg.clip_eps, 1.0 + loss_cfg.clip_eps) * adv
    surrogate = np.minimum(unclipped, clipped)
    entropy_per = -np.sum(probs * logp_all, axis=1)
    value_err = values - batch.returns

    policy_loss = -float(np.mean(surrogate))
    value_loss = 0.5 * float(np.mean(value_err**2))
    entropy = float(np.mean(entropy_per))
    total = policy_loss + loss_cfg.value_coef * value_loss - loss_cfg.entropy_coef * entropy

    # d total / d logits
    # the unclipped branch carries gradient whenever it is the minimum
    active = unclipped <= clipped
    d_logp = np.where(active, -unclipped, 0.0) / n
    onehot = np.zeros_like(probs)
    onehot[rows, actions] = 1.0
    d_logits = d_logp[:, None] * (onehot - probs)
    d_logits += (loss_cfg.entropy_coef / n) * probs * (logp_all + entropy_per[:, None])
    d_values = (loss_cfg.value_coef / n) * value_err
    _finite("d_logits", d_logits)
    _finite("d_values", d_values)

    grad = np.zeros(spec.layout.size)
    out = params.with_values(grad)
    features = cache.features
    out.view(f"{ACTION_HEAD}.weight")[...] = d_logits.T @ features
    out.view(f"{ACTION_HEAD}.bias")[...] = d_logits.sum(axis=0)
    out.view(f"{VALUE_HEAD}.weight")[...] = d_values[None, :] @ features
    out.view(f"{VALUE_HEAD}.bias")[...] = d_values.sum()

    d_h = d_logits @ params.view(f"{ACTION_HEAD}.weight") + d_values[:, None] @ params.view(
        f"{VALUE_HEAD}.weight"
    )
    for i in reversed(range(len(spec.trunk_layers))):
        layer = spec.trunk_layers[i]
        h = cache.hidden[i]
        h_prev = cache.hidden[i - 1] if i > 0 else cache.inputs
        d_pre = _finite(f"{layer}.d_pre", d_h * (1.0 - h**2))
        out.view(f"{layer}.weight")[...] = d_pre.T @ h_prev
        out.view(f"{layer}.bias")[...] = d_pre.sum(axis=0)
        d_h = d_pre @ params.view(f"{layer}.weight")

    stats = LossStats(
        total_loss=float(total),
        policy_loss=policy_loss,
        value_loss=value_loss,
        entropy=entropy,
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > loss_cfg.clip_eps)),
        approx_kl=float(np.mean(batch.old_log_probs - logp)),
        num_samples=n,
    )
    if not np.isfinite(stats.total_loss):
        raise NumericalError("total_loss")
    return stats, _finite("grad", grad)
