"""Grid navigation tasks.

All tasks share the 4-action space and the observation layout::

    [d, cos(theta), sin(theta)] + flattened k x k occupancy patch (sensor="patch")

``theta`` is the goal bearing in the agent frame, positive to the agent's left.
Flee and Explore have no goal; they receive the constant ``DUMMY_GOAL`` so the
input size matches PointNav for transfer. Stop is a no-op in Flee and Explore.
"""
from dataclasses import dataclass
from enum import IntEnum
from typing import Any, ClassVar, Dict, Mapping, MutableMapping, Optional, Set, Tuple

import numpy as np

from ..exceptions import EnvProtocolError, EpisodeGenerationError
from .delay import wait
from .episode import AgentState, Episode, GeodesicCache, generate_episode
from .grid import UNREACHABLE, Cell, GridWorld
from .metrics import (
    EXPLORE_REWARD_SCALE,
    FLEE_REWARD_SCALE,
    SLACK_REWARD,
    SUCCESS_REWARD_SCALE,
    compute_spl,
)

GOAL_DIM = 3
DUMMY_GOAL = np.array([1.0, 1.0, 0.0])
EXPLORE_BLOCK_METERS = 1.0
_RESET_ATTEMPTS = 100

StepReturn = Tuple[np.ndarray, float, bool, Dict[str, Any]]


class Action(IntEnum):
    STOP = 0
    MOVE_FORWARD = 1
    TURN_LEFT = 2
    TURN_RIGHT = 3


@dataclass(frozen=True)
class EnvConfig:
    max_episode_steps: int = 200
    min_geo: float = 1.0
    max_geo: float = 8.0
    success_radius: int = 0
    sensor: str = "patch"
    patch_size: int = 5

    @property
    def obs_dim(self) -> int:
        return obs_dim(self.sensor, self.patch_size)


def obs_dim(sensor: str, patch_size: int) -> int:
    return GOAL_DIM + (patch_size * patch_size if sensor == "patch" else 0)


class NavEnv:
    """Single environment instance; owned by one worker."""

    task: ClassVar[str] = ""

    # pylint: disable=too-many-instance-attributes
    def __init__(
        self,
        grid: GridWorld,
        config: EnvConfig,
        rng: np.random.Generator,
        step_delay: Optional[float] = None,
    ) -> None:
        self.grid = grid
        self.config = config
        self.rng = rng
        # fixed for the lifetime of the env
        self.step_delay = grid.delay.sample(rng) if step_delay is None else step_delay
        self.cache = GeodesicCache()
        self.episode: Optional[Episode] = None
        self.agent: Optional[AgentState] = None
        self.done = True
        self.episode_return = 0.0
        self.last_info: Dict[str, Any] = {}

    @property
    def obs_dim(self) -> int:
        return self.config.obs_dim

    # -- episode control -------------------------------------------------

    def reset(self, episode: Optional[Episode] = None) -> np.ndarray:
        for _ in range(_RESET_ATTEMPTS):
            ep = episode or generate_episode(
                self.grid,
                self.rng,
                self.config.min_geo,
                self.config.max_geo,
                cache=self.cache,
            )
            try:
                self._begin_episode(ep)
                break
            except EpisodeGenerationError:
                if episode is not None:
                    raise
        else:
            raise EpisodeGenerationError(f"no usable episode after {_RESET_ATTEMPTS} draws")
        self.done = False
        self.episode_return = 0.0
        self.last_info = {}
        return self.observe()

    def _begin_episode(self, episode: Episode) -> None:
        self.episode = Episode(
            start=AgentState(episode.start.cell, episode.start.heading),
            goal=episode.goal,
            shortest_path_len=episode.shortest_path_len,
            map_id=episode.map_id,
        )
        self.agent = AgentState(episode.start.cell, episode.start.heading)

    def _begin_step(self, action: int) -> Action:
        if self.done or self.agent is None:
            raise EnvProtocolError("step() called on a finished episode, call reset()")
        try:
            return Action(int(action))
        except ValueError as e:
            raise EnvProtocolError(f"unknown action {action}") from e

    def _apply_motion(self, action: Action) -> bool:
        """Move or turn the agent; returns True when a forward move succeeded."""

        assert self.agent is not None and self.episode is not None
        self.agent.steps_taken += 1
        if action == Action.TURN_LEFT:
            self.agent.heading = self.agent.heading.left()
        elif action == Action.TURN_RIGHT:
            self.agent.heading = self.agent.heading.right()
        elif action == Action.MOVE_FORWARD:
            dx, dy = self.agent.heading.delta
            nxt = (self.agent.cell[0] + dx, self.agent.cell[1] + dy)
            if self.grid.is_free(nxt):
                self.agent.cell = nxt
                self.episode.agent_path_len += self.grid.cell_size
                return True
        return False

    def _end_step(self, reward: float, done: bool, info: Dict[str, Any]) -> StepReturn:
        wait(self.step_delay)
        self.done = done
        self.episode_return += reward
        info["steps"] = self.agent.steps_taken if self.agent else 0
        info["episode_return"] = self.episode_return
        self.last_info = info
        return self.observe(), reward, done, info

    @property
    def out_of_time(self) -> bool:
        assert self.agent is not None
        return self.agent.steps_taken >= self.config.max_episode_steps

    def step(self, action: int) -> StepReturn:
        raise NotImplementedError

    # -- sensors ---------------------------------------------------------

    def goal_vector(self) -> np.ndarray:
        """Perfect GPS+Compass: ``[d, cos(theta), sin(theta)]`` in the agent frame."""

        assert self.agent is not None and self.episode is not None
        dx = (self.episode.goal[0] - self.agent.cell[0]) * self.grid.cell_size
        dy = (self.episode.goal[1] - self.agent.cell[1]) * self.grid.cell_size
        fx, fy = self.agent.heading.delta
        lx, ly = self.agent.heading.left().delta
        forward = dx * fx + dy * fy
        left = dx * lx + dy * ly
        d = float(np.hypot(forward, left))
        if d == 0.0:
            return np.array([0.0, 1.0, 0.0])
        return np.array([d, forward / d, left / d])

    def local_patch(self) -> np.ndarray:
        """k x k occupancy window in the agent frame; row 0 is farthest ahead,
        column 0 is leftmost. Cells outside the map read as occupied."""

        assert self.agent is not None
        k = self.config.patch_size
        half = k // 2
        fx, fy = self.agent.heading.delta
        rx, ry = self.agent.heading.right().delta
        x0, y0 = self.agent.cell
        patch = np.ones((k, k))
        for i in range(k):
            ahead = half - i
            for j in range(k):
                right = j - half
                cell = (x0 + ahead * fx + right * rx, y0 + ahead * fy + right * ry)
                if self.grid.is_free(cell):
                    patch[i, j] = 0.0
        return patch

    def task_goal_vector(self) -> np.ndarray:
        return self.goal_vector()

    def observe(self) -> np.ndarray:
        parts = [self.task_goal_vector()]
        if self.config.sensor == "patch":
            parts.append(self.local_patch().ravel())
        return np.concatenate(parts)

    def episode_record(self) -> Mapping[str, Any]:
        """Episode log row (JSONL)."""

        assert self.episode is not None and self.agent is not None
        return {
            "map_id": self.episode.map_id,
            "start": list(self.episode.start.cell),
            "goal": list(self.episode.goal),
            "shortest_path_len": self.episode.shortest_path_len,
            "path_len": self.episode.agent_path_len,
            "success": bool(self.last_info.get("success", False)),
            "spl": float(self.last_info.get("spl", 0.0)),
            "score": float(self.last_info.get("score", 0.0)),
            "steps": self.agent.steps_taken,
        }


class PointNavEnv(NavEnv):
    task = "pointnav"

    def _begin_episode(self, episode: Episode) -> None:
        super()._begin_episode(episode)
        self.goal_field = self.cache.get(self.grid, episode.goal)

    def cells_to_goal(self) -> int:
        assert self.agent is not None
        return int(self.goal_field[self.agent.cell[1], self.agent.cell[0]])

    def geo_to_goal(self) -> float:
        return self.cells_to_goal() * self.grid.cell_size

    def step(self, action: int) -> StepReturn:
        return step_pointnav(self, action)


class FleeEnv(NavEnv):
    task = "flee"

    def _begin_episode(self, episode: Episode) -> None:
        super()._begin_episode(episode)
        start_field = self.cache.get(self.grid, episode.start.cell)
        self.start_field = start_field
        self.max_geo_cells = int(start_field.max())
        if self.max_geo_cells <= 0:
            raise EpisodeGenerationError("start cell is isolated")
        self.flee_distance = 0.0

    def normalized_distance(self) -> float:
        """``Geo(s_t, s_0) / Max(s_0)``."""

        assert self.agent is not None
        cells = int(self.start_field[self.agent.cell[1], self.agent.cell[0]])
        return cells / self.max_geo_cells

    def task_goal_vector(self) -> np.ndarray:
        return DUMMY_GOAL.copy()

    def step(self, action: int) -> StepReturn:
        return step_flee(self, action)


class ExploreEnv(NavEnv):
    task = "explore"

    def _begin_episode(self, episode: Episode) -> None:
        super()._begin_episode(episode)
        self.block_cells = max(1, int(round(EXPLORE_BLOCK_METERS / self.grid.cell_size)))
        self.visited: Set[Cell] = {self.block_of(episode.start.cell)}

    def block_of(self, cell: Cell) -> Cell:
        return cell[0] // self.block_cells, cell[1] // self.block_cells

    def task_goal_vector(self) -> np.ndarray:
        return DUMMY_GOAL.copy()

    def step(self, action: int) -> StepReturn:
        return step_explore(self, action)


def step_pointnav(env: PointNavEnv, action: int) -> StepReturn:
    """Shaped reward ``-delta_geo - 0.01``; stop ends the episode and adds
    ``2.5 * SPL``; running out of steps ends it as a failure."""

    act = env._begin_step(action)  # pylint: disable=protected-access
    assert env.episode is not None
    before = env.geo_to_goal()
    env._apply_motion(act)  # pylint: disable=protected-access
    after = env.geo_to_goal()
    reward = -(after - before) + SLACK_REWARD

    success, spl, done = False, 0.0, False
    if act == Action.STOP:
        cells = env.cells_to_goal()
        success = cells != UNREACHABLE and cells <= env.config.success_radius
        spl = compute_spl(success, env.episode.shortest_path_len, env.episode.agent_path_len)
        reward += SUCCESS_REWARD_SCALE * spl
        done = True
    elif env.out_of_time:
        done = True
    info: Dict[str, Any] = {
        "success": success,
        "spl": spl,
        "score": spl,
        "distance_to_goal": after,
    }
    return env._end_step(reward, done, info)  # pylint: disable=protected-access


def step_flee(env: FleeEnv, action: int) -> StepReturn:
    """``r_t = 5 * (D_t - D_{t-1})`` with ``D_t = Geo(s_t, s_0) / Max(s_0)``."""

    act = env._begin_step(action)  # pylint: disable=protected-access
    before = env.flee_distance
    env._apply_motion(act)  # pylint: disable=protected-access
    env.flee_distance = env.normalized_distance()
    reward = FLEE_REWARD_SCALE * (env.flee_distance - before)
    info: Dict[str, Any] = {"D_T": env.flee_distance, "score": env.flee_distance}
    return env._end_step(reward, env.out_of_time, info)  # pylint: disable=protected-access


def step_explore(env: ExploreEnv, action: int) -> StepReturn:
    """``r_t = 0.25 * (|Visited_t| - |Visited_{t-1}|)`` over 1 m blocks."""

    act = env._begin_step(action)  # pylint: disable=protected-access
    assert env.agent is not None
    before = len(env.visited)
    env._apply_motion(act)  # pylint: disable=protected-access
    env.visited.add(env.block_of(env.agent.cell))
    reward = EXPLORE_REWARD_SCALE * (len(env.visited) - before)
    info: Dict[str, Any] = {"visited_count": len(env.visited), "score": len(env.visited)}
    return env._end_step(reward, env.out_of_time, info)  # pylint: disable=protected-access


ENV_CLASSES: MutableMapping[str, type] = {
    PointNavEnv.task: PointNavEnv,
    FleeEnv.task: FleeEnv,
    ExploreEnv.task: ExploreEnv,
}


def make_env(
    task: str,
    grid: GridWorld,
    config: EnvConfig,
    rng: np.random.Generator,
    step_delay: Optional[float] = None,
) -> NavEnv:
    try:
        cls = ENV_CLASSES[task]
    except KeyError as e:
        raise ValueError(f"Unknown task: {task}") from e
    env: NavEnv = cls(grid, config, rng, step_delay)
    return env
