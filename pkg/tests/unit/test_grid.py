import heapq

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from ddppo.envs import (
    HELDOUT_SPLIT,
    TRAIN_SPLIT,
    UNREACHABLE,
    GridWorld,
    Heading,
    bfs_geodesic,
    load_map,
    load_maps,
    map_split,
    random_map,
    save_map,
)
from ddppo.exceptions import InvalidCellError, MapFormatError


def dijkstra(grid: GridWorld, start):
    dist = np.full(grid.occupancy.shape, UNREACHABLE, dtype=np.int64)
    heap = [(0, start)]
    best = {start: 0}
    while heap:
        d, cell = heapq.heappop(heap)
        if d > best.get(cell, np.inf):
            continue
        dist[cell[1], cell[0]] = d
        for nxt in grid.neighbors(cell):
            if d + 1 < best.get(nxt, np.inf):
                best[nxt] = d + 1
                heapq.heappush(heap, (d + 1, nxt))
    return dist


@pytest.mark.parametrize("seed", range(5))
def test_bfs_matches_dijkstra(seed):
    rng = np.random.default_rng(seed)
    occupancy = rng.random((12, 9)) < 0.3
    grid = GridWorld(occupancy)
    start = grid.free_cells()[0]
    assert_array_equal(bfs_geodesic(grid, start), dijkstra(grid, start))


def test_bfs_detour(walled_grid: GridWorld):
    dist = bfs_geodesic(walled_grid, (3, 0))
    # around the wall through the gap at y=8
    assert dist[0, 5] == 8 + 2 + 8
    assert dist[0, 4] == UNREACHABLE


def test_bfs_from_occupied_cell(walled_grid: GridWorld):
    with pytest.raises(InvalidCellError):
        bfs_geodesic(walled_grid, (4, 0))
    with pytest.raises(InvalidCellError):
        bfs_geodesic(walled_grid, (10, 0))


def test_heading_turns():
    assert Heading.N.right() == Heading.E
    assert Heading.N.left() == Heading.W
    assert Heading.W.right() == Heading.N
    assert Heading.S.delta == (0, 1)


@pytest.mark.parametrize("density", [0.0, 0.2, 0.4])
def test_random_map_is_connected(density):
    grid = random_map(16, 16, density, np.random.default_rng(3))
    free = grid.free_cells()
    assert free
    dist = bfs_geodesic(grid, free[0])
    assert all(dist[y, x] != UNREACHABLE for x, y in free)


def test_map_split_is_deterministic_and_disjoint():
    train = map_split(TRAIN_SPLIT, 3, 10, 0.2, seed=5)
    again = map_split(TRAIN_SPLIT, 3, 10, 0.2, seed=5)
    heldout = map_split(HELDOUT_SPLIT, 3, 10, 0.2, seed=5)
    for a, b in zip(train, again):
        assert_array_equal(a.occupancy, b.occupancy)
    assert not any(np.array_equal(a.occupancy, b.occupancy) for a in train for b in heldout)
    assert train[0].map_id == "train-5-0"
    with pytest.raises(ValueError):
        map_split("test", 1, 10, 0.2, seed=5)


def test_map_file(tmp_path, walled_grid: GridWorld):
    path = str(tmp_path / "walled.txt")
    save_map(walled_grid, path)
    with open(path, encoding="utf8") as fd:
        lines = fd.read().splitlines()
    assert lines[0] == "10 10"
    assert lines[1] == "....#....."
    loaded = load_map(path)
    assert loaded.map_id == "walled"
    assert_array_equal(loaded.occupancy, walled_grid.occupancy)


@pytest.mark.parametrize(
    "content",
    ["", "3\n...\n", "3 2\n...\n", "3 1\n..x\n", "3 1\n....\n"],
)
def test_bad_map_file(tmp_path, content):
    path = tmp_path / "bad.txt"
    path.write_text(content, encoding="utf8")
    with pytest.raises(MapFormatError):
        load_map(str(path))


def test_load_maps_orders_by_index(tmp_path, walled_grid: GridWorld):
    for i in (10, 2, 0):
        save_map(walled_grid, str(tmp_path / f"{TRAIN_SPLIT}-{i}.txt"))
    save_map(walled_grid, str(tmp_path / f"{HELDOUT_SPLIT}-0.txt"))
    maps = load_maps(str(tmp_path), TRAIN_SPLIT, cell_size=0.5)
    assert [grid.map_id for grid in maps] == ["train-0", "train-2", "train-10"]
    assert all(grid.cell_size == 0.5 for grid in maps)

    with pytest.raises(MapFormatError):
        load_maps(str(tmp_path / "missing"), TRAIN_SPLIT)
    with pytest.raises(ValueError):
        load_maps(str(tmp_path), "test")
