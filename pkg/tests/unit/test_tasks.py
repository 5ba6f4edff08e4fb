import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ddppo.envs import (
    DUMMY_GOAL,
    Action,
    AgentState,
    EnvConfig,
    Episode,
    ExploreEnv,
    FleeEnv,
    GridWorld,
    Heading,
    PointNavEnv,
    compute_spl,
    generate_episode,
    make_env,
    make_env_batch,
    obs_dim,
)
from ddppo.exceptions import (
    EnvProtocolError,
    InfeasibleEpisodeError,
    InvalidEpisodeError,
)

FWD = int(Action.MOVE_FORWARD)
STOP = int(Action.STOP)
LEFT = int(Action.TURN_LEFT)
RIGHT = int(Action.TURN_RIGHT)


def episode(start, heading, goal, cells):
    return Episode(AgentState(start, heading), goal, shortest_path_len=cells * 0.25)


def pointnav(grid, **kwargs) -> PointNavEnv:
    return PointNavEnv(grid, EnvConfig(**kwargs), np.random.default_rng(0), step_delay=0.0)


def test_obs_dim():
    assert obs_dim("patch", 5) == 28
    assert obs_dim("blind", 5) == 3
    assert EnvConfig(sensor="patch", patch_size=3).obs_dim == 12


def test_goal_vector_agent_frame(open_grid: GridWorld):
    env = pointnav(open_grid)
    obs = env.reset(episode((2, 5), Heading.E, (6, 5), 4))
    assert_allclose(obs[:3], [1.0, 1.0, 0.0])

    env.reset(episode((2, 5), Heading.E, (2, 1), 4))
    # goal to the north while facing east: straight to the left
    assert_allclose(env.goal_vector(), [1.0, 0.0, 1.0], atol=1e-12)


def test_goal_vector_at_goal(open_grid: GridWorld):
    env = pointnav(open_grid)
    env.reset(episode((2, 5), Heading.E, (3, 5), 1))
    env.step(FWD)
    assert_allclose(env.goal_vector(), [0.0, 1.0, 0.0])


def test_local_patch_agent_frame(open_grid: GridWorld):
    env = pointnav(open_grid, patch_size=3)
    env.reset(episode((0, 0), Heading.E, (3, 0), 3))
    # row 0 is ahead, column 0 the left side; outside the map reads occupied
    assert_array_equal(env.local_patch(), [[1, 0, 0], [1, 0, 0], [1, 1, 1]])


def test_shortest_path_episode(open_grid: GridWorld):
    env = pointnav(open_grid)
    env.reset(episode((2, 5), Heading.E, (6, 5), 4))
    rewards = []
    for _ in range(4):
        _, reward, done, info = env.step(FWD)
        rewards.append(reward)
        assert not done
    assert_allclose(rewards, [0.24] * 4)
    assert info["distance_to_goal"] == 0.0

    _, reward, done, info = env.step(STOP)
    assert done
    assert info["success"] and info["spl"] == 1.0
    assert reward == pytest.approx(-0.01 + 2.5)
    assert env.episode_return == pytest.approx(4 * 0.24 + 2.49)
    record = env.episode_record()
    assert record["path_len"] == 1.0
    assert record["steps"] == 5


def test_detour_lowers_spl(open_grid: GridWorld):
    env = pointnav(open_grid)
    env.reset(episode((2, 5), Heading.E, (4, 5), 2))
    for action in (LEFT, FWD, RIGHT, FWD, FWD, RIGHT, FWD, STOP):
        _, _, done, info = env.step(action)
    assert done and info["success"]
    assert info["spl"] == pytest.approx(0.5 / 1.0)


def test_collision_costs_slack_only(open_grid: GridWorld):
    env = pointnav(open_grid)
    env.reset(episode((0, 5), Heading.W, (3, 5), 3))
    _, reward, done, _ = env.step(FWD)
    assert reward == pytest.approx(-0.01)
    assert not done
    assert env.agent.cell == (0, 5)
    assert env.episode.agent_path_len == 0.0


def test_early_stop_fails(open_grid: GridWorld):
    env = pointnav(open_grid)
    env.reset(episode((2, 5), Heading.E, (6, 5), 4))
    _, reward, done, info = env.step(STOP)
    assert done and not info["success"]
    assert info["spl"] == 0.0
    assert reward == pytest.approx(-0.01)


def test_success_radius(open_grid: GridWorld):
    env = pointnav(open_grid, success_radius=1)
    env.reset(episode((2, 5), Heading.E, (4, 5), 2))
    env.step(FWD)
    _, _, _, info = env.step(STOP)
    assert info["success"]


def test_time_limit(open_grid: GridWorld):
    env = pointnav(open_grid, max_episode_steps=3)
    env.reset(episode((2, 5), Heading.E, (6, 5), 4))
    dones = [env.step(LEFT)[2] for _ in range(3)]
    assert dones == [False, False, True]
    assert not env.last_info["success"]


def test_step_protocol(open_grid: GridWorld):
    env = pointnav(open_grid)
    with pytest.raises(EnvProtocolError):
        env.step(FWD)
    env.reset(episode((2, 5), Heading.E, (6, 5), 4))
    with pytest.raises(EnvProtocolError):
        env.step(7)
    env.step(STOP)
    with pytest.raises(EnvProtocolError):
        env.step(FWD)


def test_flee_rewards_telescope(open_grid: GridWorld):
    env = FleeEnv(open_grid, EnvConfig(), np.random.default_rng(0), step_delay=0.0)
    obs = env.reset(episode((0, 0), Heading.E, (1, 0), 1))
    assert_array_equal(obs[:3], DUMMY_GOAL)
    total = 0.0
    for action in (FWD, FWD, RIGHT, FWD, STOP, FWD):
        _, reward, done, info = env.step(action)
        total += reward
        assert not done
    # max geodesic from the corner is 18 cells, agent is 4 away
    assert info["D_T"] == pytest.approx(4 / 18)
    assert total == pytest.approx(5 * info["D_T"])
    assert info["score"] == info["D_T"]


def test_explore_counts_blocks(open_grid: GridWorld):
    env = ExploreEnv(open_grid, EnvConfig(), np.random.default_rng(0), step_delay=0.0)
    obs = env.reset(episode((1, 1), Heading.E, (2, 1), 1))
    assert_array_equal(obs[:3], DUMMY_GOAL)
    rewards = [env.step(FWD)[1] for _ in range(3)]
    # 1 m blocks are 4 cells wide: the third move enters block (1, 0)
    assert rewards == [0.0, 0.0, 0.25]
    _, _, done, info = env.step(STOP)
    assert not done
    assert info["visited_count"] == 2


@pytest.mark.parametrize(
    "success,shortest,path,expected",
    [
        (True, 1.0, 1.0, 1.0),
        (True, 1.0, 2.0, 0.5),
        (False, 1.0, 1.0, 0.0),
        (True, 2.0, 1.0, 1.0),
    ],
)
def test_compute_spl(success, shortest, path, expected):
    assert compute_spl(success, shortest, path) == pytest.approx(expected)


def test_compute_spl_needs_positive_length():
    with pytest.raises(InvalidEpisodeError):
        compute_spl(True, 0.0, 1.0)


@pytest.mark.parametrize("seed", range(3))
def test_generated_episodes_in_range(walled_grid: GridWorld, seed):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        ep = generate_episode(walled_grid, rng, 1.0, 3.0)
        assert 1.0 <= ep.shortest_path_len <= 3.0
        assert walled_grid.is_free(ep.start.cell) and walled_grid.is_free(ep.goal)
        assert ep.map_id == "walled"


def test_infeasible_episode():
    grid = GridWorld(np.zeros((1, 2), dtype=bool))
    with pytest.raises(InfeasibleEpisodeError):
        generate_episode(grid, np.random.default_rng(0), 5.0, 8.0, max_attempts=50)


def test_make_env_unknown_task(open_grid: GridWorld):
    with pytest.raises(ValueError):
        make_env("rearrange", open_grid, EnvConfig(), np.random.default_rng(0))


def test_env_batch_resets_finished_envs(open_grid: GridWorld):
    batch = make_env_batch(
        "pointnav",
        [open_grid],
        EnvConfig(max_episode_steps=2, min_geo=0.5, max_geo=2.0),
        3,
        np.random.default_rng(0),
    )
    obs = batch.reset()
    assert obs.shape == (3, 28)
    batch.step([LEFT] * 3)
    step = batch.step([LEFT] * 3)
    assert step.dones.all()
    assert len(step.finished) == 3
    assert all(not env.done for env in batch.envs)
    assert all(env.agent.steps_taken == 0 for env in batch.envs)
    assert step.finished[0]["episode_return"] == pytest.approx(-0.02)
