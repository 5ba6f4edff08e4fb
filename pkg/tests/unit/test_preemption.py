import pytest

from ddppo.distrib import KvClient, KvServer, PreemptionPolicy
from ddppo.distrib.preemption import report_rollout_done, should_preempt
from ddppo.exceptions import ConfigurationError


@pytest.mark.parametrize(
    "p,world_size,expected",
    [(0.6, 5, 3), (0.6, 4, 3), (1.0, 4, 4), (0.5, 3, 2), (0.6, 1, 1), (0.25, 8, 2)],
)
def test_threshold(p, world_size, expected):
    assert PreemptionPolicy(p, 128).threshold(world_size) == expected


@pytest.mark.parametrize("capacity,expected", [(128, 32), (5, 2), (1, 1)])
def test_min_steps(capacity, expected):
    assert PreemptionPolicy(0.6, capacity).min_steps == expected


@pytest.mark.parametrize("p", [0.0, 1.01])
def test_invalid_fraction(p):
    with pytest.raises(ConfigurationError):
        PreemptionPolicy(p, 128)


def test_preempt_after_enough_finishers(kv_server: KvServer):
    policy = PreemptionPolicy(0.6, 128)
    with KvClient(kv_server.address) as store:
        assert not should_preempt(store, 0, policy, 64, world_size=5)
        for _ in range(3):
            report_rollout_done(store, 0)
        assert should_preempt(store, 0, policy, 64, world_size=5)
        # a straggler keeps at least a quarter rollout
        assert not should_preempt(store, 0, policy, 31, world_size=5)
        # counters are per iteration
        assert not should_preempt(store, 1, policy, 64, world_size=5)


def test_store_failure_means_not_yet():
    store = KvClient("127.0.0.1:1", timeout=0.5, connect_retries=1, retry_interval=0.01)
    assert not should_preempt(store, 0, PreemptionPolicy(0.6, 8), 8, world_size=2)
