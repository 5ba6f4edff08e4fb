"""Single-worker PPO.

:class:`PPO` runs the whole collect/optimise cycle on its own. Distributed
training (:class:`ddppo.trainer.ddppo.DDPPOWorker`) only overrides the hooks
``should_stop_collection``, ``on_rollout_complete``, ``reduce_gradient``,
``sync_stats`` and ``after_update``.
"""
import os
from dataclasses import asdict, dataclass
from typing import Any, List, Mapping, Optional, Sequence

import numpy as np

from ..config_utils import TrainConfig
from ..envs import DelayModel, EnvConfig, GridWorld, make_env_batch, obs_dim
from ..exceptions import NumericalError, ProtocolError
from ..file_utils import atomic_write, create_dir, dumps
from ..nn import (
    AdamState,
    FreezeMask,
    LossConfig,
    LossStats,
    NetSpec,
    ParamVector,
    adam_step,
    forward_batch,
    init_params,
    loss_and_grad,
    sample_actions,
)
from ..rollout import RolloutBuffer, compute_gae, make_ppo_batches
from ..utils import Stopwatch, ddppo_logger, get_logger, rank_detail
from .stats import EpisodeTotals, IterationStats, mean_loss, pack_local, unpack_group

COLLECT = "collect"
OPTIMIZE = "optimize"
ALLREDUCE = "allreduce"


@dataclass
class Rngs:
    init: np.random.Generator
    env: np.random.Generator
    policy: np.random.Generator
    batch: np.random.Generator


def make_rngs(seed: int, rank: int) -> Rngs:
    """``init`` depends on the seed only, so every rank starts from the same
    parameters; the others are independent streams per rank."""

    env, policy, batch = np.random.SeedSequence([seed, rank]).spawn(3)
    return Rngs(
        init=np.random.default_rng(np.random.SeedSequence([seed])),
        env=np.random.default_rng(env),
        policy=np.random.default_rng(policy),
        batch=np.random.default_rng(batch),
    )


def make_net_spec(config: TrainConfig) -> NetSpec:
    return NetSpec(
        obs_dim=obs_dim(config.sensor, config.patch_size),
        hidden_dims=config.hidden_dims,
    )


def make_env_config(config: TrainConfig) -> EnvConfig:
    return EnvConfig(
        max_episode_steps=config.max_episode_steps,
        min_geo=config.min_geo,
        max_geo=config.max_geo,
        success_radius=config.success_radius,
        sensor=config.sensor,
        patch_size=config.patch_size,
    )


class PPO:
    # pylint: disable=too-many-instance-attributes,too-many-arguments
    def __init__(
        self,
        config: TrainConfig,
        maps: Sequence[GridWorld],
        rank: int = 0,
        world_size: int = 1,
        params: Optional[ParamVector] = None,
        mask: Optional[FreezeMask] = None,
    ) -> None:
        self.config = config
        self.rank = rank
        self.world_size = world_size
        self.spec = make_net_spec(config)
        self.rngs = make_rngs(config.seed, rank)
        self.params = params if params is not None else init_params(self.spec, self.rngs.init)
        self.params.check_layout(self.spec)
        self.mask = mask if mask is not None else FreezeMask.none(self.spec.layout)
        self.adam = AdamState.zeros(len(self.params))
        self.loss_cfg = LossConfig(
            clip_eps=config.clip_eps,
            value_coef=config.value_coef,
            entropy_coef=config.entropy_coef,
        )
        self.envs = make_env_batch(
            config.task,
            maps,
            make_env_config(config),
            config.envs_per_worker,
            self.rngs.env,
            DelayModel.from_config(config.delay),
        )
        self.obs = self.envs.reset()
        self.iteration = 0
        self.total_steps = 0
        self.stopwatch = Stopwatch()
        self.episodes = EpisodeTotals()
        # episode log rows of the current iteration
        self.finished: List[Mapping[str, Any]] = []
        self.preempted = False
        self.logger: ddppo_logger = get_logger("trainer", rank_detail(rank, world_size))

    # -- hooks -----------------------------------------------------------

    # pylint: disable=unused-argument
    def should_stop_collection(self, steps: int) -> bool:
        return False

    def on_rollout_complete(self) -> None:
        pass

    def reduce_gradient(self, grad: np.ndarray) -> np.ndarray:
        return grad

    def sync_stats(self, values: np.ndarray) -> np.ndarray:
        return values

    def after_update(self) -> None:
        pass

    # -- phases ----------------------------------------------------------

    def collect_rollout(self) -> RolloutBuffer:
        """Step all envs in lock-step for up to T steps; the rollout may end
        early when ``should_stop_collection`` says so."""

        capacity = self.config.rollout_steps
        buffer = RolloutBuffer(
            capacity, len(self.envs), self.spec.obs_dim, params_hash=self.params.hash
        )
        self.preempted = False
        for t in range(capacity):
            cache = forward_batch(self.spec, self.params, self.obs)
            assert cache.logits is not None and cache.values is not None
            actions, log_probs = sample_actions(cache.logits, self.rngs.policy)
            step = self.envs.step(actions)
            buffer.insert(self.obs, actions, log_probs, cache.values, step.rewards, step.dones)
            self.obs = step.obs
            self.episodes.add(step.finished)
            self.finished.extend(step.finished)
            if t + 1 < capacity and self.should_stop_collection(t + 1):
                self.preempted = True
                self.logger.debug("Rollout preempted after %d steps", t + 1)
                break
        if not self.preempted:
            self.on_rollout_complete()
        bootstrap = forward_batch(self.spec, self.params, self.obs).values
        assert bootstrap is not None
        return buffer.finish(bootstrap)

    def update(self, buffer: RolloutBuffer) -> List[LossStats]:
        """GAE, then ``epochs`` passes over env-partitioned minibatches."""

        if buffer.params_hash != self.params.hash:
            raise ProtocolError("rollout was collected with stale parameters")
        advantages = compute_gae(buffer, self.config.gamma, self.config.tau_gae)
        stats = []
        try:
            for _ in range(self.config.epochs):
                for batch in make_ppo_batches(
                    buffer, advantages, self.rngs.batch, self.config.minibatches
                ):
                    loss, grad = loss_and_grad(self.spec, self.params, batch, self.loss_cfg)
                    stats.append(loss)
                    with self.stopwatch.phase(ALLREDUCE):
                        grad = self.reduce_gradient(grad)
                    self.params, self.adam = adam_step(
                        self.params,
                        grad,
                        self.adam,
                        self.config.lr,
                        self.mask,
                        self.config.max_grad_norm,
                    )
        except NumericalError as e:
            self.dump_diagnostics(e, stats)
            raise
        return stats

    def dump_diagnostics(self, error: NumericalError, stats: List[LossStats]) -> str:
        create_dir(self.config.output_dir)
        path = os.path.join(
            self.config.output_dir, f"diagnostics-{self.iteration}-rank{self.rank}.json"
        )
        atomic_write(
            path,
            dumps(
                {
                    "iteration": self.iteration,
                    "rank": self.rank,
                    "tensor_id": error.tensor_id,
                    "losses": [asdict(s) for s in stats],
                    "params_hash": self.params.hash,
                    "params_finite": bool(np.all(np.isfinite(self.params.values))),
                }
            ),
        )
        self.logger.error("%s, diagnostics written to %s", error.message, path)
        return path

    def train_iteration(self) -> IterationStats:
        """One collect -> optimise cycle plus the group statistics."""

        self.stopwatch.reset()
        self.episodes = EpisodeTotals()
        self.finished = []
        with self.stopwatch.phase(COLLECT):
            buffer = self.collect_rollout()
        with self.stopwatch.phase(OPTIMIZE):
            losses = self.update(buffer)
        self.after_update()

        local = pack_local(
            buffer.num_steps,
            buffer.length,
            self.rank,
            self.world_size,
            self.preempted,
            self.episodes,
            mean_loss(losses),
        )
        with self.stopwatch.phase(ALLREDUCE):
            summed = self.sync_stats(local)
        steps, num_preempted, lengths, episodes, loss_means = unpack_group(
            summed, self.world_size
        )
        self.total_steps += steps
        stats = IterationStats(
            iteration=self.iteration,
            rank=self.rank,
            world_size=self.world_size,
            steps_collected=buffer.num_steps,
            steps_total=steps,
            total_steps_so_far=self.total_steps,
            rollout_length=buffer.length,
            rollout_lengths=lengths,
            preempted=self.preempted,
            num_preempted=num_preempted,
            losses=loss_means,
            episodes=int(episodes.count),
            mean_reward=episodes.mean("reward"),
            success=episodes.mean("success"),
            spl=episodes.mean("spl"),
            score=episodes.mean("score"),
            collect_time=self.stopwatch.get(COLLECT),
            optimize_time=self.stopwatch.get(OPTIMIZE),
            allreduce_time=self.stopwatch.get(ALLREDUCE),
            params_hash=self.params.hash,
        )
        self.iteration += 1
        return stats
