"""Occupancy grids and geodesic (4-connected BFS) distance fields.

Cells are addressed ``(x, y)``; ``occupancy[y, x]`` is True for blocked cells.
"""
import glob
import os
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import InvalidCellError, MapFormatError
from .delay import DelayModel

Cell = Tuple[int, int]

UNREACHABLE = -1
FREE_CHAR = "."
OCCUPIED_CHAR = "#"
TRAIN_SPLIT = "train"
HELDOUT_SPLIT = "heldout"
_SPLIT_SEED_OFFSET = {TRAIN_SPLIT: 0, HELDOUT_SPLIT: 1_000_003}


class Heading(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3

    @property
    def delta(self) -> Cell:
        return _DELTAS[self]

    def left(self) -> "Heading":
        return Heading((self - 1) % 4)

    def right(self) -> "Heading":
        return Heading((self + 1) % 4)


_DELTAS = {
    Heading.N: (0, -1),
    Heading.E: (1, 0),
    Heading.S: (0, 1),
    Heading.W: (-1, 0),
}


@dataclass
class GridWorld:
    occupancy: np.ndarray
    cell_size: float = 0.25
    delay: DelayModel = field(default_factory=DelayModel)
    map_id: str = "map"

    def __post_init__(self) -> None:
        self.occupancy = np.asarray(self.occupancy, dtype=bool)

    @property
    def width(self) -> int:
        return int(self.occupancy.shape[1])

    @property
    def height(self) -> int:
        return int(self.occupancy.shape[0])

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.occupancy[cell[1], cell[0]]

    def free_cells(self) -> List[Cell]:
        ys, xs = np.nonzero(~self.occupancy)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    def neighbors(self, cell: Cell) -> Iterator[Cell]:
        x, y = cell
        for dx, dy in _DELTAS.values():
            nxt = (x + dx, y + dy)
            if self.is_free(nxt):
                yield nxt


def bfs_geodesic(grid: GridWorld, start: Cell) -> np.ndarray:
    """Distance field in cells from ``start``; unreachable cells hold ``UNREACHABLE``.

    Raises:
        InvalidCellError: ``start`` is occupied or outside the grid.
    """

    if not grid.is_free(start):
        raise InvalidCellError(start)
    dist = np.full(grid.occupancy.shape, UNREACHABLE, dtype=np.int64)
    dist[start[1], start[0]] = 0
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        d = dist[cell[1], cell[0]] + 1
        for nxt in grid.neighbors(cell):
            if dist[nxt[1], nxt[0]] == UNREACHABLE:
                dist[nxt[1], nxt[0]] = d
                queue.append(nxt)
    return dist


def _largest_component(occupancy: np.ndarray) -> np.ndarray:
    grid = GridWorld(occupancy)
    seen = np.zeros(occupancy.shape, dtype=bool)
    best: Optional[np.ndarray] = None
    for cell in grid.free_cells():
        if seen[cell[1], cell[0]]:
            continue
        reach = bfs_geodesic(grid, cell) != UNREACHABLE
        seen |= reach
        if best is None or reach.sum() > best.sum():
            best = reach
    if best is None:
        return np.zeros(occupancy.shape, dtype=bool)
    return best


def random_map(
    width: int,
    height: int,
    density: float,
    rng: np.random.Generator,
    cell_size: float = 0.25,
    map_id: str = "map",
) -> GridWorld:
    """Random obstacle fill; free cells outside the largest connected
    component are blocked so that every free cell is mutually reachable."""

    occupancy = rng.random((height, width)) < density
    occupancy = ~_largest_component(occupancy)
    return GridWorld(occupancy, cell_size=cell_size, map_id=map_id)


def map_split(
    split: str,
    count: int,
    size: int,
    density: float,
    seed: int,
    cell_size: float = 0.25,
) -> Sequence[GridWorld]:
    """Deterministic train / held-out map sets; the two never share a seed."""

    if split not in _SPLIT_SEED_OFFSET:
        raise ValueError(f"Unknown map split: {split}")
    base = seed + _SPLIT_SEED_OFFSET[split]
    maps = []
    for i in range(count):
        rng = np.random.default_rng([base, i])
        maps.append(
            random_map(size, size, density, rng, cell_size, map_id=f"{split}-{seed}-{i}")
        )
    return maps


def load_map(path: str, cell_size: float = 0.25) -> GridWorld:
    """Read the plain-text map format: ``width height`` then rows of ``.``/``#``."""

    with open(path, encoding="utf8") as file:
        lines = [line.rstrip("\n") for line in file if line.strip()]
    if not lines:
        raise MapFormatError(path, "empty file")
    try:
        width, height = (int(v) for v in lines[0].split())
    except ValueError as e:
        raise MapFormatError(path, "first line must be 'width height'") from e
    rows = lines[1:]
    if len(rows) != height:
        raise MapFormatError(path, f"expected {height} rows, got {len(rows)}")
    occupancy = np.zeros((height, width), dtype=bool)
    for y, row in enumerate(rows):
        if len(row) != width or set(row) - {FREE_CHAR, OCCUPIED_CHAR}:
            raise MapFormatError(path, f"row {y} must be {width} chars of '.' or '#'")
        occupancy[y] = [c == OCCUPIED_CHAR for c in row]
    map_id = os.path.splitext(os.path.basename(path))[0]
    return GridWorld(occupancy, cell_size=cell_size, map_id=map_id)


def dump_map(grid: GridWorld) -> str:
    rows = [
        "".join(OCCUPIED_CHAR if blocked else FREE_CHAR for blocked in row)
        for row in grid.occupancy
    ]
    return "\n".join([f"{grid.width} {grid.height}", *rows]) + "\n"


def save_map(grid: GridWorld, path: str) -> None:
    with open(path, "w", encoding="utf8") as file:
        file.write(dump_map(grid))


def _map_order(path: str) -> Tuple[str, int]:
    stem = os.path.splitext(os.path.basename(path))[0]
    head, _, tail = stem.rpartition("-")
    return (head, int(tail)) if tail.isdigit() else (stem, -1)


def load_maps(directory: str, split: str, cell_size: float = 0.25) -> Sequence[GridWorld]:
    """All ``<split>-*.txt`` maps of ``directory`` (as written by ``ddppo maps``),
    ordered by their trailing index.

    Raises:
        MapFormatError: no map of ``split`` in ``directory`` or a file is malformed.
    """

    if split not in _SPLIT_SEED_OFFSET:
        raise ValueError(f"Unknown map split: {split}")
    paths = sorted(glob.glob(os.path.join(directory, f"{split}-*.txt")), key=_map_order)
    if not paths:
        raise MapFormatError(directory, f"no '{split}-*.txt' maps")
    return [load_map(path, cell_size) for path in paths]
