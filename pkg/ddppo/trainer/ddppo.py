"""Distributed worker: PPO plus gradient AllReduce and straggler preemption."""
from typing import Optional, Sequence

import numpy as np

from ..config_utils import TrainConfig
from ..distrib import (
    CollectiveHandle,
    PreemptionPolicy,
    report_rollout_done,
    should_preempt,
    verify_consistent,
)
from ..envs import GridWorld
from ..nn import FreezeMask, ParamVector
from .ppo import PPO


class DDPPOWorker(PPO):
    """One rank of a DD-PPO group.

    Every rank applies the same averaged gradient with the same Adam state, so
    parameters stay bit-identical without ever being broadcast.
    """

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        config: TrainConfig,
        maps: Sequence[GridWorld],
        handle: CollectiveHandle,
        params: Optional[ParamVector] = None,
        mask: Optional[FreezeMask] = None,
    ) -> None:
        super().__init__(config, maps, handle.rank, handle.world_size, params, mask)
        self.handle = handle
        self.policy = PreemptionPolicy(config.p_preempt, config.rollout_steps)

    @property
    def coordinates(self) -> bool:
        return self.world_size > 1 and self.handle.store is not None

    def should_stop_collection(self, steps: int) -> bool:
        if not self.coordinates:
            return False
        assert self.handle.store is not None
        return should_preempt(
            self.handle.store, self.iteration, self.policy, steps, self.world_size
        )

    def on_rollout_complete(self) -> None:
        if self.coordinates:
            assert self.handle.store is not None
            count = report_rollout_done(self.handle.store, self.iteration)
            self.logger.debug("Rollout complete, %d of %d done", count, self.world_size)

    def reduce_gradient(self, grad: np.ndarray) -> np.ndarray:
        return self.handle.allreduce_mean(grad)

    def sync_stats(self, values: np.ndarray) -> np.ndarray:
        return self.handle.allreduce_sum(values)

    def after_update(self) -> None:
        if self.config.debug_sync_check:
            verify_consistent(self.handle, self.iteration, self.params.hash)
