import time

import numpy as np
import pytest

from ddppo.config_utils import DelayConfig
from ddppo.envs import Action, DelayModel, EnvConfig, GridWorld, make_env, wait
from ddppo.exceptions import ConfigurationError


def test_none_is_free():
    assert DelayModel().sample(np.random.default_rng(0)) == 0.0


def test_homogeneous_is_constant():
    model = DelayModel.from_config(DelayConfig(kind="homogeneous", mu=0.003))
    rng = np.random.default_rng(0)
    assert {model.sample(rng) for _ in range(10)} == {0.003}


def test_heterogeneous_is_log_uniform():
    model = DelayModel(kind="heterogeneous", lo=0.001, hi=0.1)
    rng = np.random.default_rng(0)
    samples = np.array([model.sample(rng) for _ in range(5000)])
    assert samples.min() >= 0.001 and samples.max() <= 0.1
    # log-uniform: the geometric midpoint splits the mass in half
    assert np.mean(samples < 0.01) == pytest.approx(0.5, abs=0.03)


def test_invalid_kind():
    with pytest.raises(ConfigurationError):
        DelayModel(kind="bursty")


def test_wait_blocks_for_duration():
    start = time.perf_counter()
    wait(0.01)
    assert time.perf_counter() - start >= 0.01
    wait(0.0)


@pytest.mark.parametrize("mu", [0.005, 0.01])
def test_env_step_latency_matches_duration(mu):
    grid = GridWorld(
        np.zeros((10, 10), dtype=bool),
        delay=DelayModel.from_config(DelayConfig(kind="homogeneous", mu=mu)),
    )
    env = make_env("pointnav", grid, EnvConfig(), np.random.default_rng(0))
    assert env.step_delay == mu
    env.reset()
    steps = 50
    start = time.perf_counter()
    for _ in range(steps):
        _, _, done, _ = env.step(int(Action.TURN_LEFT))
        if done:
            env.reset()
    mean = (time.perf_counter() - start) / steps
    assert mean == pytest.approx(mu, rel=0.2)
