"""Policy evaluation on a map split and geodesic-distance binning."""
from dataclasses import dataclass
from typing import (
    Any,
    Dict,
    List,
    Mapping,
    MutableMapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import pandas as pd

from ..config_utils import TrainConfig
from ..envs import (
    HELDOUT_SPLIT,
    Episode,
    GeodesicCache,
    GridWorld,
    generate_episode,
    make_env,
)
from ..exceptions import ConfigurationError, LayoutMismatchError
from ..file_utils import JsonlWriter, read_jsonl
from ..nn import Checkpoint, load_checkpoint
from ..trainer import make_env_config, make_net_spec, split_maps
from ..utils import get_logger, none_if_nan
from .agents import Agent, PolicyAgent

logger = get_logger("harness.evaluate")

# SPL below this counts as a non-perfect episode
PERFECT_SPL = 0.99
_EVAL_SEED_OFFSET = 7_919

EPISODE_COLUMNS = (
    "episode",
    "map_id",
    "start",
    "goal",
    "geodesic",
    "success",
    "spl",
    "score",
    "steps",
    "path_len",
    "samples",
)


@dataclass
class EvalReport:
    """Per-episode rows; every aggregate is recomputed from them."""

    episodes: pd.DataFrame

    def __post_init__(self) -> None:
        missing = set(EPISODE_COLUMNS) - set(self.episodes.columns)
        if missing:
            raise ConfigurationError("episodes", f"missing columns {sorted(missing)}")

    def __len__(self) -> int:
        return len(self.episodes)

    @property
    def success_rate(self) -> Optional[float]:
        return none_if_nan(self.episodes["success"].mean()) if len(self) else None

    @property
    def mean_spl(self) -> Optional[float]:
        return none_if_nan(self.episodes["spl"].mean()) if len(self) else None

    @property
    def mean_score(self) -> Optional[float]:
        return none_if_nan(self.episodes["score"].mean()) if len(self) else None

    def summary(self) -> Dict[str, Any]:
        non_perfect = self.episodes[self.episodes["spl"] < PERFECT_SPL]
        return {
            "episodes": len(self),
            "success": self.success_rate,
            "spl": self.mean_spl,
            "score": self.mean_score,
            "non_perfect_fraction": len(non_perfect) / len(self) if len(self) else None,
            "non_perfect_success": none_if_nan(non_perfect["success"].mean())
            if len(non_perfect)
            else None,
            "non_perfect_spl": none_if_nan(non_perfect["spl"].mean())
            if len(non_perfect)
            else None,
        }

    def to_jsonl(self, path: str) -> str:
        with JsonlWriter(path, mode="wb") as writer:
            writer.write_all(self.episodes.to_dict(orient="records"))
        return path

    @classmethod
    def from_jsonl(cls, path: str) -> "EvalReport":
        return cls(pd.DataFrame(list(read_jsonl(path))))


def eval_episodes(
    config: TrainConfig, split: str, num_episodes: int
) -> List[Tuple[GridWorld, Episode]]:
    """Fixed episode set: maps cycle, start/goal drawn from a split-specific seed."""

    maps = split_maps(config, split, config.num_eval_maps)
    rng = np.random.default_rng([config.seed, _EVAL_SEED_OFFSET])
    cache = GeodesicCache()
    episodes = []
    for i in range(num_episodes):
        grid = maps[i % len(maps)]
        episodes.append(
            (grid, generate_episode(grid, rng, config.min_geo, config.max_geo, cache=cache))
        )
    return episodes


def run_episode(
    config: TrainConfig,
    grid: GridWorld,
    episode: Episode,
    agent: Agent,
    seed: Sequence[int],
) -> Mapping[str, Any]:
    env = make_env(
        config.task, grid, make_env_config(config), np.random.default_rng(seed), step_delay=0.0
    )
    obs = env.reset(episode)
    agent.reset()
    done = False
    while not done:
        obs, _, done, _ = env.step(agent.act(env, obs))
    return env.episode_record()


def _agent_for(
    source: Union[str, Checkpoint, Agent], config: TrainConfig, greedy: bool, seed: int
) -> Agent:
    if isinstance(source, Agent):
        return source
    spec = make_net_spec(config)
    ckpt = source if isinstance(source, Checkpoint) else load_checkpoint(source, spec)
    if ckpt.spec.layout.hash != spec.layout.hash:
        raise LayoutMismatchError(spec.layout.hash, ckpt.spec.layout.hash)
    return PolicyAgent(spec, ckpt.params, greedy, np.random.default_rng([seed, 1]))


# pylint: disable=too-many-arguments,too-many-locals
def evaluate(
    source: Union[str, Checkpoint, Agent],
    config: TrainConfig,
    split: str = HELDOUT_SPLIT,
    num_episodes: int = 100,
    samples_per_episode: int = 1,
    greedy: bool = True,
    episodes_path: Optional[str] = None,
) -> EvalReport:
    """Run ``num_episodes`` fixed episodes, each repeated ``samples_per_episode``
    times; rows hold the per-episode means over the repeats.

    Raises:
        LayoutMismatchError: checkpoint and config describe different nets.
    """

    if num_episodes < 1 or samples_per_episode < 1:
        raise ConfigurationError("num_episodes", "episodes and samples must be >= 1")
    agent = _agent_for(source, config, greedy, config.seed)
    rows: List[MutableMapping[str, Any]] = []
    for i, (grid, episode) in enumerate(eval_episodes(config, split, num_episodes)):
        records = [
            run_episode(config, grid, episode, agent, [config.seed, i, s])
            for s in range(samples_per_episode)
        ]
        rows.append(
            {
                "episode": i,
                "map_id": grid.map_id,
                "start": list(episode.start.cell),
                "goal": list(episode.goal),
                "geodesic": episode.shortest_path_len,
                "success": float(np.mean([r["success"] for r in records])),
                "spl": float(np.mean([r["spl"] for r in records])),
                "score": float(np.mean([r["score"] for r in records])),
                "steps": float(np.mean([r["steps"] for r in records])),
                "path_len": float(np.mean([r["path_len"] for r in records])),
                "samples": samples_per_episode,
            }
        )
    report = EvalReport(pd.DataFrame(rows, columns=list(EPISODE_COLUMNS)))
    if episodes_path:
        report.to_jsonl(episodes_path)
    logger.info(
        "Evaluated %d episodes on %s: success %s, spl %s",
        len(report),
        split,
        report.success_rate,
        report.mean_spl,
    )
    return report


def aggregate_bins(report: EvalReport, bin_edges: Sequence[float]) -> pd.DataFrame:
    """Per geodesic-distance bin ``[lo, hi)`` (the last bin also takes ``hi``):
    episode fraction, mean success, SPL and score. Empty bins keep a fraction of
    0 and null aggregates."""

    if not len(report):
        raise ConfigurationError("report", "cannot bin an empty report")
    edges = [float(e) for e in bin_edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ConfigurationError("bin_edges", "need at least two increasing edges")
    geodesic = report.episodes["geodesic"]
    rows = []
    for k, (lo, hi) in enumerate(zip(edges, edges[1:])):
        last = k == len(edges) - 2
        inside = (geodesic >= lo) & ((geodesic <= hi) if last else (geodesic < hi))
        selected = report.episodes[inside]
        count = len(selected)
        rows.append(
            {
                "bin_lo": lo,
                "bin_hi": hi,
                "episodes": count,
                "fraction": count / len(report),
                "success": none_if_nan(selected["success"].mean()) if count else None,
                "spl": none_if_nan(selected["spl"].mean()) if count else None,
                "score": none_if_nan(selected["score"].mean()) if count else None,
            }
        )
    return pd.DataFrame(rows)
