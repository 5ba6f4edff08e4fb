"""Adam with global gradient-norm clipping and parameter freezing."""
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError, NumericalError
from .net import Layout, ParamVector


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size))


@dataclass(frozen=True)
class FreezeMask:
    """``frozen[i]`` is True when parameter ``i`` must never change."""

    frozen: np.ndarray

    @classmethod
    def none(cls, layout: Layout) -> "FreezeMask":
        return cls(np.zeros(layout.size, dtype=bool))

    @classmethod
    def for_layers(cls, layout: Layout, prefixes: Sequence[str]) -> "FreezeMask":
        return cls(layout.mask(prefixes))

    @property
    def any(self) -> bool:
        return bool(self.frozen.any())


def clip_grad_norm(grad: np.ndarray, max_norm: Optional[float]) -> Tuple[np.ndarray, float]:
    """Scale ``grad`` so its global L2 norm is at most ``max_norm``.

    ``max_norm`` of None or <= 0 disables clipping. Returns the clipped gradient
    and the norm before clipping.
    """

    norm = float(np.linalg.norm(grad))
    if max_norm is None or max_norm <= 0 or norm <= max_norm:
        return grad, norm
    return grad * (max_norm / norm), norm


# pylint: disable=too-many-arguments
def adam_step(
    params: ParamVector,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    mask: FreezeMask,
    max_grad_norm: Optional[float],
) -> Tuple[ParamVector, AdamState]:
    """One Adam update.

    Frozen entries are excluded from the clipping norm and keep their parameter
    and moment values bit-identical.

    Raises:
        NumericalError: the gradient contains NaN/inf.
    """

    if lr <= 0:
        raise ConfigurationError("lr", "must be > 0")
    if grad.shape != params.values.shape or state.m.shape != grad.shape:
        raise ConfigurationError(
            "grad", f"shape {grad.shape} does not match params {params.values.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise NumericalError("grad")

    frozen = mask.frozen
    grad = np.where(frozen, 0.0, grad)
    grad, _ = clip_grad_norm(grad, max_grad_norm)

    t = state.step_count + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    updated = params.values - lr * m_hat / (np.sqrt(v_hat) + state.eps)

    if mask.any:
        updated = np.where(frozen, params.values, updated)
        m = np.where(frozen, state.m, m)
        v = np.where(frozen, state.v, v)
    return params.with_values(updated), replace(state, m=m, v=v, step_count=t)
