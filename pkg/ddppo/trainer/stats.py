"""Per-iteration statistics.

Local numbers are packed into one vector so a single ``allreduce_sum`` gives
rank 0 the group totals.
"""
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, List, Mapping, MutableMapping, Optional, Tuple

import numpy as np

from ..nn import LossStats
from ..utils import none_if_nan

_LOSS_FIELDS = (
    "total_loss",
    "policy_loss",
    "value_loss",
    "entropy",
    "clip_fraction",
    "approx_kl",
)


@dataclass
class EpisodeTotals:
    """Sums over episodes finished during one rollout."""

    count: float = 0.0
    reward: float = 0.0
    success: float = 0.0
    spl: float = 0.0
    score: float = 0.0

    def add(self, records: Iterable[Mapping[str, Any]]) -> None:
        for record in records:
            self.count += 1
            self.reward += float(record.get("episode_return", 0.0))
            self.success += float(record.get("success", False))
            self.spl += float(record.get("spl", 0.0))
            self.score += float(record.get("score", 0.0))

    def to_array(self) -> np.ndarray:
        return np.array([self.count, self.reward, self.success, self.spl, self.score])

    @classmethod
    def from_array(cls, values: np.ndarray) -> "EpisodeTotals":
        return cls(*(float(v) for v in values))

    def mean(self, name: str) -> Optional[float]:
        if not self.count:
            return None
        return float(getattr(self, name)) / self.count


def mean_loss(stats: List[LossStats]) -> np.ndarray:
    if not stats:
        return np.full(len(_LOSS_FIELDS), np.nan)
    return np.array([[getattr(s, f) for f in _LOSS_FIELDS] for s in stats]).mean(axis=0)


@dataclass
class IterationStats:
    # pylint: disable=too-many-instance-attributes
    iteration: int
    rank: int
    world_size: int
    steps_collected: int
    steps_total: int
    total_steps_so_far: int
    rollout_length: int
    rollout_lengths: List[int]
    preempted: bool
    num_preempted: int
    losses: MutableMapping[str, Optional[float]] = field(default_factory=dict)
    episodes: int = 0
    mean_reward: Optional[float] = None
    success: Optional[float] = None
    spl: Optional[float] = None
    score: Optional[float] = None
    collect_time: float = 0.0
    optimize_time: float = 0.0
    allreduce_time: float = 0.0
    params_hash: str = ""

    @property
    def steps_per_sec(self) -> float:
        elapsed = self.collect_time + self.optimize_time
        return self.steps_total / elapsed if elapsed > 0 else 0.0

    def to_dict(self) -> MutableMapping[str, Any]:
        d = asdict(self)
        d["steps_per_sec"] = self.steps_per_sec
        return d


def pack_local(
    steps: int,
    rollout_length: int,
    rank: int,
    world_size: int,
    preempted: bool,
    episodes: EpisodeTotals,
    losses: np.ndarray,
) -> np.ndarray:
    """``[steps, preempted, lengths(N), episode totals(5), losses(6)]``."""

    lengths = np.zeros(world_size)
    lengths[rank] = rollout_length
    return np.concatenate(
        [[float(steps), float(preempted)], lengths, episodes.to_array(), losses]
    )


def unpack_group(
    summed: np.ndarray, world_size: int
) -> Tuple[int, int, List[int], EpisodeTotals, MutableMapping[str, Optional[float]]]:
    steps = int(round(summed[0]))
    preempted = int(round(summed[1]))
    lengths = [int(round(v)) for v in summed[2 : 2 + world_size]]
    offset = 2 + world_size
    episodes = EpisodeTotals.from_array(summed[offset : offset + 5])
    loss_values = summed[offset + 5 :] / world_size
    losses = {name: none_if_nan(v) for name, v in zip(_LOSS_FIELDS, loss_values)}
    return steps, preempted, lengths, episodes, losses
