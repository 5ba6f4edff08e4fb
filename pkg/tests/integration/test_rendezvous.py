import threading

import pytest

from ddppo.distrib import KvClient, KvServer, WorkerGroup, barrier, rendezvous
from ddppo.distrib.group import verify_consistent
from ddppo.exceptions import (
    BarrierTimeoutError,
    ConfigurationError,
    DuplicateRankError,
    LayoutMismatchError,
    ProtocolError,
    RendezvousTimeoutError,
)
from ddppo.harness.launcher import free_ports

pytestmark = pytest.mark.integration


def peers(n):
    return tuple(f"127.0.0.1:{port}" for port in free_ports(n))


def test_group_from_env():
    group = WorkerGroup(1, 2, ("h:1", "h:2"), "h:3")
    assert WorkerGroup.from_env(group.to_env()) == group
    assert WorkerGroup.from_env({}) == WorkerGroup(0, 1)


@pytest.mark.parametrize(
    "rank,world_size,addresses,kv",
    [
        (2, 2, ("a:1", "a:2"), "k:1"),
        (0, 2, ("a:1",), "k:1"),
        (0, 2, ("a:1", "a:2"), None),
    ],
)
def test_invalid_group(rank, world_size, addresses, kv):
    with pytest.raises(ConfigurationError):
        WorkerGroup(rank, world_size, addresses, kv)


def test_rendezvous_forms_ring(run_group):
    results = run_group(3, lambda handle: (handle.prev_rank, handle.rank, handle.next_rank))
    assert results == [(2, 0, 1), (0, 1, 2), (1, 2, 0)]


def test_duplicate_rank(kv_server: KvServer):
    with KvClient(kv_server.address) as client:
        client.add("rdzv.rank.0", 1)
    group = WorkerGroup(0, 2, peers(2), kv_server.address)
    with pytest.raises(DuplicateRankError):
        rendezvous(group, 1, timeout=1.0)


def test_missing_rank_times_out(kv_server: KvServer):
    group = WorkerGroup(0, 2, peers(2), kv_server.address)
    with pytest.raises(RendezvousTimeoutError) as info:
        rendezvous(group, 1, timeout=0.5)
    assert info.value.missing_ranks == (1,)


def test_layout_mismatch(kv_server: KvServer):
    addresses = peers(2)
    errors = []

    def member(rank):
        group = WorkerGroup(rank, 2, addresses, kv_server.address)
        try:
            rendezvous(group, 100 + rank, timeout=5.0).close()
        except (LayoutMismatchError, ProtocolError) as e:
            errors.append(type(e))

    threads = [threading.Thread(target=member, args=(r,)) for r in range(2)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert errors == [LayoutMismatchError, LayoutMismatchError]


def test_barrier_timeout(kv_server: KvServer):
    with KvClient(kv_server.address) as client:
        with pytest.raises(BarrierTimeoutError):
            barrier(client, "lonely", 2, timeout=0.2)


def test_barrier_generations(kv_server: KvServer):
    order = []

    def member(rank):
        with KvClient(kv_server.address) as client:
            for i in range(5):
                order.append((i, rank))
                barrier(client, "gen", 3, timeout=10.0)

    threads = [threading.Thread(target=member, args=(r,)) for r in range(3)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    # nobody enters round i+1 before everyone entered round i
    rounds = [i for i, _ in order]
    assert rounds == sorted(rounds)


def test_verify_consistent_detects_divergence(run_group):
    def body(handle):
        verify_consistent(handle, 0, "same")
        try:
            verify_consistent(handle, 1, f"rank-{handle.rank}")
        except ProtocolError:
            return "diverged"
        return "ok"

    assert run_group(2, body) == ["diverged", "diverged"]
