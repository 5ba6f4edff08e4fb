from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from .delay import DelayModel
from .grid import GridWorld
from .tasks import EnvConfig, NavEnv, make_env


@dataclass
class BatchStep:
    obs: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    infos: List[Dict[str, Any]]
    finished: List[Mapping[str, Any]] = field(default_factory=list)


class EnvBatch:
    """E envs stepped sequentially in lock-step; finished episodes are reset
    immediately and the returned observation is the one of the new episode."""

    def __init__(self, envs: Sequence[NavEnv]) -> None:
        if not envs:
            raise ValueError("EnvBatch needs at least one env")
        self.envs = list(envs)
        self.obs_dim = self.envs[0].obs_dim

    def __len__(self) -> int:
        return len(self.envs)

    @property
    def step_delays(self) -> List[float]:
        return [env.step_delay for env in self.envs]

    def reset(self) -> np.ndarray:
        return np.stack([env.reset() for env in self.envs])

    def step(self, actions: Sequence[int], active: Optional[np.ndarray] = None) -> BatchStep:
        """Step every env (or only ``active`` ones; inactive rows keep zeros)."""

        num = len(self.envs)
        obs = np.zeros((num, self.obs_dim))
        rewards = np.zeros(num)
        dones = np.zeros(num, dtype=bool)
        infos: List[Dict[str, Any]] = [{} for _ in range(num)]
        finished: List[Mapping[str, Any]] = []
        for i, env in enumerate(self.envs):
            if active is not None and not active[i]:
                continue
            ob, reward, done, info = env.step(int(actions[i]))
            if done:
                record = dict(env.episode_record())
                record["episode_return"] = env.episode_return
                finished.append(record)
                ob = env.reset()
            obs[i], rewards[i], dones[i], infos[i] = ob, reward, done, info
        return BatchStep(obs, rewards, dones, infos, finished)


# pylint: disable=too-many-arguments
def make_env_batch(
    task: str,
    maps: Sequence[GridWorld],
    config: EnvConfig,
    num_envs: int,
    rng: np.random.Generator,
    delay: Optional[DelayModel] = None,
) -> EnvBatch:
    """Each env gets a map drawn at random from ``maps`` and its own generator
    spawned from ``rng``; the delay model fixes each env's step cost here."""

    delay = delay or DelayModel()
    envs = []
    for _ in range(num_envs):
        grid = maps[int(rng.integers(len(maps)))]
        env_rng = np.random.default_rng(rng.integers(2**63))
        envs.append(make_env(task, grid, config, env_rng, step_delay=delay.sample(env_rng)))
    return EnvBatch(envs)
