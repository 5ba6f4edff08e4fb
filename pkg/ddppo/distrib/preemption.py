"""Straggler preemption.

Workers that finish a full rollout increment ``done.<iteration>``; a worker
still collecting is preempted once at least ``ceil(p * N)`` workers are done
and it has itself collected at least ``ceil(T / 4)`` steps.
"""
import math
from dataclasses import dataclass

from ..exceptions import ConfigurationError, TransportError
from ..utils import get_logger
from .store import KvClient, iteration_key, kv_add

logger = get_logger("distrib.preemption")

DONE_FAMILY = "done"


@dataclass(frozen=True)
class PreemptionPolicy:
    threshold_fraction: float
    rollout_capacity: int

    def __post_init__(self) -> None:
        if not 0 < self.threshold_fraction <= 1:
            raise ConfigurationError("p_preempt", "must be in (0, 1]")
        if self.rollout_capacity < 1:
            raise ConfigurationError("rollout_steps", "must be >= 1")

    @property
    def min_steps(self) -> int:
        return math.ceil(self.rollout_capacity / 4)

    def threshold(self, world_size: int) -> int:
        """Finisher count that triggers preemption."""

        # round() guards against 0.6 * 5 == 3.0000000000000004
        return math.ceil(round(self.threshold_fraction * world_size, 9))


def done_key(iteration: int) -> str:
    return iteration_key(DONE_FAMILY, iteration)


def report_rollout_done(store: KvClient, iteration: int) -> int:
    """Called once per iteration by workers that collected a full rollout."""

    return kv_add(store, done_key(iteration), 1)


def should_preempt(
    store: KvClient,
    iteration: int,
    policy: PreemptionPolicy,
    my_steps: int,
    world_size: int,
) -> bool:
    """Non-blocking poll; KV failures count as "not yet"."""

    if my_steps < policy.min_steps:
        return False
    try:
        done = store.get_counter(done_key(iteration))
    except TransportError as e:
        logger.warning("Preemption poll failed, continuing collection: %s", e.message)
        return False
    return done >= policy.threshold(world_size)
