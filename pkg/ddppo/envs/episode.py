from dataclasses import dataclass
from typing import Any, Mapping, MutableMapping, Optional

import numpy as np

from ..exceptions import InfeasibleEpisodeError
from .grid import UNREACHABLE, Cell, GridWorld, Heading, bfs_geodesic

MAX_ATTEMPTS = 10_000


@dataclass
class AgentState:
    cell: Cell
    heading: Heading
    steps_taken: int = 0


@dataclass
class Episode:
    start: AgentState
    goal: Cell
    shortest_path_len: float
    agent_path_len: float = 0.0
    map_id: str = ""

    def to_dict(self) -> Mapping[str, Any]:
        return {
            "map_id": self.map_id,
            "start": list(self.start.cell),
            "heading": self.start.heading.name,
            "goal": list(self.goal),
            "shortest_path_len": self.shortest_path_len,
        }


class GeodesicCache:
    """Memoises BFS fields per (map, root cell)."""

    def __init__(self) -> None:
        self._fields: MutableMapping[Any, np.ndarray] = {}

    def get(self, grid: GridWorld, root: Cell) -> np.ndarray:
        key = (id(grid), root)
        field = self._fields.get(key)
        if field is None:
            field = bfs_geodesic(grid, root)
            self._fields[key] = field
        return field

    def clear(self) -> None:
        self._fields.clear()


# pylint: disable=too-many-arguments
def generate_episode(
    grid: GridWorld,
    rng: np.random.Generator,
    min_geo: float,
    max_geo: float,
    max_attempts: int = MAX_ATTEMPTS,
    cache: Optional[GeodesicCache] = None,
) -> Episode:
    """Rejection-sample a start/goal pair of free cells whose geodesic distance
    lies in ``[min_geo, max_geo]`` meters; the start heading is uniform.

    Raises:
        InfeasibleEpisodeError: no valid pair within ``max_attempts`` draws.
    """

    free = grid.free_cells()
    if len(free) < 2:
        raise InfeasibleEpisodeError(0, min_geo, max_geo)
    cache = cache or GeodesicCache()
    # inclusive bounds in whole cells, tolerant to float rounding of meters
    lo = int(np.ceil(min_geo / grid.cell_size - 1e-9))
    hi = int(np.floor(max_geo / grid.cell_size + 1e-9))
    lo = max(lo, 1)
    for _ in range(max_attempts):
        start = free[int(rng.integers(len(free)))]
        goal = free[int(rng.integers(len(free)))]
        dist = int(cache.get(grid, start)[goal[1], goal[0]])
        if dist == UNREACHABLE or not lo <= dist <= hi:
            continue
        heading = Heading(int(rng.integers(4)))
        return Episode(
            start=AgentState(cell=start, heading=heading),
            goal=goal,
            shortest_path_len=dist * grid.cell_size,
            map_id=grid.map_id,
        )
    raise InfeasibleEpisodeError(max_attempts, min_geo, max_geo)
