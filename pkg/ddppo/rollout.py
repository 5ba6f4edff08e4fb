"""Rollout storage and generalized advantage estimation.

Buffers are time-major, ``(T, E, ...)``. Each env keeps its own
``steps_collected``; a rollout cut short by preemption stores the value of the
state it stopped in as ``bootstrap_values`` so that GAE bootstraps instead of
treating the cut as an episode end.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError


@dataclass
class PpoBatch:
    obs: np.ndarray
    actions: np.ndarray
    old_log_probs: np.ndarray
    old_values: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return int(self.actions.shape[0])


@dataclass
class AdvantageSet:
    advantages: np.ndarray
    returns: np.ndarray


class RolloutBuffer:
    # pylint: disable=too-many-instance-attributes
    def __init__(
        self,
        capacity: int,
        num_envs: int,
        obs_dim: int,
        params_hash: Optional[str] = None,
    ) -> None:
        if capacity < 1 or num_envs < 1:
            raise ConfigurationError("rollout", "capacity and num_envs must be >= 1")
        self.capacity = capacity
        self.num_envs = num_envs
        self.obs_dim = obs_dim
        # parameter snapshot the experience was collected with
        self.params_hash = params_hash

        self.obs = np.zeros((capacity, num_envs, obs_dim))
        self.actions = np.zeros((capacity, num_envs), dtype=np.int64)
        self.log_probs = np.zeros((capacity, num_envs))
        self.values = np.zeros((capacity, num_envs))
        self.rewards = np.zeros((capacity, num_envs))
        self.dones = np.zeros((capacity, num_envs), dtype=bool)
        self.steps_collected = np.zeros(num_envs, dtype=np.int64)
        self.bootstrap_values = np.zeros(num_envs)
        self.finished = False

    # pylint: disable=too-many-arguments
    def insert(
        self,
        obs: np.ndarray,
        actions: np.ndarray,
        log_probs: np.ndarray,
        values: np.ndarray,
        rewards: np.ndarray,
        dones: np.ndarray,
        active: Optional[np.ndarray] = None,
    ) -> None:
        """Append one step for every env (or only the ``active`` ones)."""

        if self.finished:
            raise ConfigurationError("rollout", "buffer already finished")
        envs = np.arange(self.num_envs) if active is None else np.flatnonzero(active)
        t = self.steps_collected[envs]
        if np.any(t >= self.capacity):
            raise ConfigurationError("rollout", f"capacity {self.capacity} exceeded")
        self.obs[t, envs] = np.asarray(obs)[envs]
        self.actions[t, envs] = np.asarray(actions)[envs]
        self.log_probs[t, envs] = np.asarray(log_probs)[envs]
        self.values[t, envs] = np.asarray(values)[envs]
        self.rewards[t, envs] = np.asarray(rewards)[envs]
        self.dones[t, envs] = np.asarray(dones)[envs]
        self.steps_collected[envs] += 1

    def finish(self, bootstrap_values: np.ndarray) -> "RolloutBuffer":
        if np.any(self.steps_collected < 1):
            raise ConfigurationError("rollout", "every env needs at least one step")
        self.bootstrap_values = np.asarray(bootstrap_values, dtype=np.float64).copy()
        self.finished = True
        return self

    @property
    def num_steps(self) -> int:
        return int(self.steps_collected.sum())

    @property
    def length(self) -> int:
        """Rollout length (steps per env) of a lock-step rollout."""

        return int(self.steps_collected.max(initial=0))

    def env_slice(self, env: int, data: np.ndarray) -> np.ndarray:
        return data[: self.steps_collected[env], env]


def compute_gae(buffer: RolloutBuffer, gamma: float, tau: float) -> AdvantageSet:
    """Generalized advantage estimates, backwards in time per env::

        delta_t = r_t + gamma * V_{t+1} * (1 - done_t) - V_t
        A_t     = delta_t + gamma * tau * (1 - done_t) * A_{t+1}

    ``V_{T'}`` after the last stored step is the env's bootstrap value.
    """

    if not 0.0 <= gamma <= 1.0 or not 0.0 <= tau <= 1.0:
        raise ConfigurationError("gamma/tau", "must be in [0, 1]")

    advantages = np.zeros_like(buffer.rewards)
    for env in range(buffer.num_envs):
        n = int(buffer.steps_collected[env])
        rewards = buffer.rewards[:n, env]
        values = buffer.values[:n, env]
        not_done = 1.0 - buffer.dones[:n, env].astype(np.float64)
        next_values = np.append(values[1:], buffer.bootstrap_values[env])
        deltas = rewards + gamma * next_values * not_done - values
        gae = 0.0
        for t in reversed(range(n)):
            gae = deltas[t] + gamma * tau * not_done[t] * gae
            advantages[t, env] = gae
    return AdvantageSet(advantages=advantages, returns=advantages + buffer.values)


def _gather(buffer: RolloutBuffer, data: np.ndarray, envs: Sequence[int]) -> np.ndarray:
    return np.concatenate([buffer.env_slice(env, data) for env in envs], axis=0)


def make_ppo_batches(
    buffer: RolloutBuffer,
    advantages: AdvantageSet,
    rng: np.random.Generator,
    num_minibatches: int,
) -> List[PpoBatch]:
    """Partition the buffer's envs (whole trajectories) into minibatches.

    Call once per epoch; each call reshuffles the env partition.

    Raises:
        ConfigurationError: ``num_minibatches`` does not divide the env count.
    """

    if num_minibatches < 1 or buffer.num_envs % num_minibatches:
        raise ConfigurationError(
            "minibatches",
            f"{num_minibatches} minibatches do not divide {buffer.num_envs} envs",
        )
    order = rng.permutation(buffer.num_envs)
    batches = []
    for envs in np.split(order, num_minibatches):
        envs = [int(env) for env in envs]
        batches.append(
            PpoBatch(
                obs=_gather(buffer, buffer.obs, envs),
                actions=_gather(buffer, buffer.actions, envs),
                old_log_probs=_gather(buffer, buffer.log_probs, envs),
                old_values=_gather(buffer, buffer.values, envs),
                advantages=_gather(buffer, advantages.advantages, envs),
                returns=_gather(buffer, advantages.returns, envs),
            )
        )
    return batches
