import numpy as np
import pandas as pd
import pytest

from ddppo.config_utils import TrainConfig, build_config
from ddppo.envs import HELDOUT_SPLIT, TRAIN_SPLIT, GridWorld, save_map
from ddppo.exceptions import ConfigurationError, LayoutMismatchError, MapFormatError
from ddppo.harness import (
    EvalReport,
    PolicyAgent,
    ShortestPathAgent,
    StopAgent,
    aggregate_bins,
    evaluate,
)
from ddppo.harness.evaluate import EPISODE_COLUMNS, eval_episodes
from ddppo.nn import Checkpoint, NetSpec, forward, init_params


@pytest.fixture
def config() -> TrainConfig:
    return build_config(
        {"map_size": 12, "num_eval_maps": 3, "patch_size": 3, "hidden_dims": [8]}
    )


def report_of(geodesic, success, spl) -> EvalReport:
    n = len(geodesic)
    return EvalReport(
        pd.DataFrame(
            {
                "episode": range(n),
                "map_id": ["m"] * n,
                "start": [[0, 0]] * n,
                "goal": [[1, 1]] * n,
                "geodesic": geodesic,
                "success": success,
                "spl": spl,
                "score": spl,
                "steps": [10] * n,
                "path_len": [1.0] * n,
                "samples": [1] * n,
            }
        )
    )


def test_eval_episodes_are_fixed(config: TrainConfig):
    a = eval_episodes(config, HELDOUT_SPLIT, 6)
    b = eval_episodes(config, HELDOUT_SPLIT, 6)
    assert [e.to_dict() for _, e in a] == [e.to_dict() for _, e in b]
    assert [g.map_id for g, _ in a][:4] == [
        f"heldout-{config.seed}-0",
        f"heldout-{config.seed}-1",
        f"heldout-{config.seed}-2",
        f"heldout-{config.seed}-0",
    ]


def test_shortest_path_agent_is_perfect(config: TrainConfig):
    report = evaluate(ShortestPathAgent(), config, TRAIN_SPLIT, num_episodes=12)
    assert len(report) == 12
    assert report.success_rate == 1.0
    assert report.mean_spl == pytest.approx(1.0)
    assert report.summary()["non_perfect_fraction"] == 0.0


def test_stop_agent_always_fails(config: TrainConfig):
    report = evaluate(StopAgent(), config, num_episodes=5, samples_per_episode=2)
    assert report.success_rate == 0.0
    assert report.mean_spl == 0.0
    assert (report.episodes["samples"] == 2).all()
    assert (report.episodes["steps"] == 1).all()


def test_policy_checkpoint(tmp_path, config: TrainConfig):
    spec = NetSpec(obs_dim=12, hidden_dims=(8,))
    ckpt = Checkpoint(spec, init_params(spec, np.random.default_rng(0)))
    path = str(tmp_path / "episodes.jsonl")
    report = evaluate(ckpt, config, num_episodes=3, episodes_path=path)
    assert list(report.episodes.columns) == list(EPISODE_COLUMNS)
    reloaded = EvalReport.from_jsonl(path)
    assert reloaded.episodes["spl"].tolist() == report.episodes["spl"].tolist()


def test_policy_checkpoint_layout_mismatch(config: TrainConfig):
    spec = NetSpec(obs_dim=12, hidden_dims=(16,))
    ckpt = Checkpoint(spec, init_params(spec, np.random.default_rng(0)))
    with pytest.raises(LayoutMismatchError):
        evaluate(ckpt, config, num_episodes=1)


def test_summary_non_perfect():
    report = report_of([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0, 0.0], [1.0, 0.5, 0.7, 0.0])
    summary = report.summary()
    assert summary["success"] == 0.75
    assert summary["non_perfect_fraction"] == 0.75
    assert summary["non_perfect_success"] == pytest.approx(2 / 3)
    assert summary["non_perfect_spl"] == pytest.approx(0.4)


def test_aggregate_bins_half_open():
    report = report_of(
        [1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
        [1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 0.5, 1.0, 0.0, 0.9],
    )
    bins = aggregate_bins(report, [1.0, 2.0, 4.0, 6.0])
    assert bins["episodes"].tolist() == [2, 2, 2]
    assert bins["fraction"].tolist() == pytest.approx([1 / 3] * 3)
    assert bins["success"].tolist() == [0.5, 1.0, 0.5]
    assert bins["spl"].tolist() == pytest.approx([0.5, 0.75, 0.45])


def test_aggregate_bins_empty_bin():
    report = report_of([1.0, 1.2], [1.0, 0.0], [1.0, 0.0])
    bins = aggregate_bins(report, [1.0, 2.0, 3.0])
    assert bins["episodes"].tolist() == [2, 0]
    assert bins["fraction"].tolist() == [1.0, 0.0]
    assert pd.isna(bins["success"].iloc[1])
    assert pd.isna(bins["spl"].iloc[1])


@pytest.mark.parametrize("edges", [[1.0], [2.0, 1.0], [1.0, 1.0]])
def test_aggregate_bins_invalid_edges(edges):
    with pytest.raises(ConfigurationError):
        aggregate_bins(report_of([1.0], [1.0], [1.0]), edges)


def test_rows_carry_start_and_goal(tmp_path, config: TrainConfig):
    path = str(tmp_path / "episodes.jsonl")
    report = evaluate(ShortestPathAgent(), config, num_episodes=4, episodes_path=path)
    expected = eval_episodes(config, HELDOUT_SPLIT, 4)
    reloaded = EvalReport.from_jsonl(path)
    for frame in (report.episodes, reloaded.episodes):
        assert list(frame["start"]) == [list(e.start.cell) for _, e in expected]
        assert list(frame["goal"]) == [list(e.goal) for _, e in expected]


def test_evaluate_on_saved_maps(tmp_path, config: TrainConfig):
    open_map = GridWorld(np.zeros((6, 6), dtype=bool), cell_size=config.cell_size)
    for i in range(2):
        save_map(open_map, str(tmp_path / f"heldout-{i}.txt"))
    # maps of the other split are ignored
    save_map(open_map, str(tmp_path / "train-0.txt"))

    saved = config.override(maps_dir=str(tmp_path))
    report = evaluate(ShortestPathAgent(), saved, HELDOUT_SPLIT, num_episodes=4)
    assert report.episodes["map_id"].tolist() == ["heldout-0", "heldout-1"] * 2
    assert report.success_rate == 1.0


def test_saved_maps_missing_split(tmp_path, config: TrainConfig):
    with pytest.raises(MapFormatError):
        evaluate(StopAgent(), config.override(maps_dir=str(tmp_path)), num_episodes=1)


def test_greedy_policy_agent_takes_argmax():
    spec = NetSpec(obs_dim=12, hidden_dims=(8,))
    params = init_params(spec, np.random.default_rng(3))
    agent = PolicyAgent(spec, params, greedy=True)
    rng = np.random.default_rng(4)
    for _ in range(10):
        obs = rng.normal(size=12)
        expected = int(np.argmax(forward(spec, params, obs).action_logits))
        assert agent.act(None, obs) == expected
