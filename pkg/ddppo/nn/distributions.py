from typing import Tuple

import numpy as np

from .loss import log_softmax


def sample_action(
    logits: np.ndarray, rng: np.random.Generator
) -> Tuple[int, float, float]:
    """Draw from ``softmax(logits)``.

    Returns:
        action index, its log-probability and the distribution entropy
    """

    logp = log_softmax(np.asarray(logits, dtype=np.float64))
    probs = np.exp(logp)
    # inverse CDF keeps exactly one uniform draw per sample
    u = rng.random()
    action = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    action = min(action, probs.shape[0] - 1)
    entropy = float(-np.sum(probs * logp))
    return action, float(logp[action]), entropy


def sample_actions(
    logits: np.ndarray, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`sample_action` for a ``(B, A)`` batch."""

    actions = np.empty(logits.shape[0], dtype=np.int64)
    log_probs = np.empty(logits.shape[0])
    for i, row in enumerate(logits):
        actions[i], log_probs[i], _ = sample_action(row, rng)
    return actions, log_probs


def greedy_actions(logits: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    actions = np.argmax(logits, axis=-1)
    logp = log_softmax(logits)
    return actions, np.take_along_axis(logp, actions[:, None], axis=1)[:, 0]
