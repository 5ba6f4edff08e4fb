import os

import pandas as pd
import pytest
from click.testing import CliRunner

from ddppo import create_cli_app
from ddppo.file_utils import JsonlWriter


@pytest.fixture
def app():
    return create_cli_app()


def test_commands_registered(app):
    result = CliRunner().invoke(app, ["--help"])
    assert result.exit_code == 0
    for name in ("launch", "worker", "kv-server", "bench", "eval", "agg", "maps"):
        assert name in result.output


def test_agg(tmp_path, app):
    episodes = str(tmp_path / "episodes.jsonl")
    with JsonlWriter(episodes) as writer:
        for i, geo in enumerate([1.0, 2.5, 3.0, 7.5]):
            writer.write(
                {
                    "episode": i,
                    "map_id": "m",
                    "start": [0, 0],
                    "goal": [1, 1],
                    "geodesic": geo,
                    "success": 1.0,
                    "spl": 0.5,
                    "score": 0.5,
                    "steps": 10,
                    "path_len": 2.0,
                    "samples": 1,
                }
            )
    out = str(tmp_path / "bins.csv")
    result = CliRunner().invoke(app, ["agg", episodes, "--bins", "1,3,8", "-o", out])
    assert result.exit_code == 0, result.output
    binned = pd.read_csv(out)
    assert binned["episodes"].tolist() == [2, 2]
    assert binned["fraction"].tolist() == [0.5, 0.5]


@pytest.mark.parametrize("bins", ["1", "3,1", "a,b"])
def test_agg_rejects_bad_bins(tmp_path, app, bins):
    episodes = tmp_path / "episodes.jsonl"
    episodes.write_text("", "utf8")
    result = CliRunner().invoke(app, ["agg", str(episodes), "--bins", bins])
    assert result.exit_code == 2


def test_maps(tmp_path, app):
    out = str(tmp_path / "maps")
    result = CliRunner().invoke(
        app, ["maps", "--split", "heldout", "-o", out, "--set", "num_eval_maps=2"]
    )
    assert result.exit_code == 0, result.output
    assert sorted(os.listdir(out)) == ["heldout-1-0.txt", "heldout-1-1.txt"]


def test_invalid_override(app):
    result = CliRunner().invoke(app, ["maps", "--set", "seed"])
    assert result.exit_code == 2


def test_eval_scripted_agent(tmp_path, app):
    out = str(tmp_path / "episodes.jsonl")
    result = CliRunner().invoke(
        app,
        [
            "eval",
            "--agent",
            "shortest-path",
            "--episodes",
            "4",
            "--set",
            "map_size=10",
            "-o",
            out,
            "--bins",
            "1,4,8",
        ],
    )
    assert result.exit_code == 0, result.output
    assert "success" in result.output
    assert len(pd.read_json(out, lines=True)) == 4


def test_eval_policy_needs_checkpoint(app):
    result = CliRunner().invoke(app, ["eval"])
    assert result.exit_code == 2
