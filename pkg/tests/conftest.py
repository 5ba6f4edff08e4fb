from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterator, List

import numpy as np
import pytest

from ddppo.config_utils import TrainConfig, build_config
from ddppo.distrib import CollectiveHandle, KvServer, WorkerGroup, rendezvous
from ddppo.envs import GridWorld
from ddppo.harness.launcher import free_ports


@pytest.fixture(autouse=True)
def no_conf_env(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("DDPPO_CONF", raising=False)


@pytest.fixture
def kv_server() -> Iterator[KvServer]:
    with KvServer("127.0.0.1", 0) as server:
        yield server


@pytest.fixture
def open_grid() -> GridWorld:
    return GridWorld(np.zeros((10, 10), dtype=bool), cell_size=0.25, map_id="open")


@pytest.fixture
def walled_grid() -> GridWorld:
    # a vertical wall at x=4 with a single gap at y=8
    occupancy = np.zeros((10, 10), dtype=bool)
    occupancy[:, 4] = True
    occupancy[8, 4] = False
    return GridWorld(occupancy, cell_size=0.25, map_id="walled")


@pytest.fixture
def tiny_config(tmp_path: Any) -> TrainConfig:
    return build_config(
        {
            "rollout_steps": 8,
            "envs_per_worker": 2,
            "epochs": 1,
            "minibatches": 1,
            "hidden_dims": [8],
            "patch_size": 3,
            "map_size": 8,
            "num_train_maps": 2,
            "num_eval_maps": 2,
            "max_episode_steps": 20,
            "min_geo": 0.5,
            "max_geo": 2.0,
            "total_steps": 64,
            "checkpoint_interval": 2,
            "output_dir": str(tmp_path / "run"),
            "barrier_timeout": 30.0,
            "rendezvous_timeout": 30.0,
        }
    )


RankBody = Callable[[CollectiveHandle], Any]


@pytest.fixture
def run_group(kv_server: KvServer) -> Callable[..., List[Any]]:
    """Run ``body(handle)`` on every rank of a freshly rendezvoused group,
    one thread per rank; returns the per-rank results in rank order."""

    def run(
        world_size: int, body: RankBody, layout_hash: int = 1, timeout: float = 30.0
    ) -> List[Any]:
        peers = tuple(f"127.0.0.1:{port}" for port in free_ports(world_size))

        def member(rank: int) -> Any:
            group = WorkerGroup(rank, world_size, peers, kv_server.address)
            handle = rendezvous(group, layout_hash, timeout=timeout, barrier_timeout=timeout)
            try:
                return body(handle)
            finally:
                handle.close()

        with ThreadPoolExecutor(max_workers=world_size) as pool:
            futures = [pool.submit(member, rank) for rank in range(world_size)]
            return [future.result(timeout=120) for future in futures]

    return run
