"""Learning and scaling runs against the thresholds in ``reference/acceptance.yaml``.

Each test launches real worker processes and takes minutes; select them with
``pytest -m slow``.
"""
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import psutil
import pytest
import yaml

from ddppo.config_utils import load_config
from ddppo.file_utils import atomic_write, dumps
from ddppo.harness import EvalReport, bench_scaling, evaluate, launch
from ddppo.harness.bench import BenchReport
from ddppo.trainer import checkpoint_path

pytestmark = [pytest.mark.integration, pytest.mark.slow]

ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
REFERENCE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "reference")

BENCH = [
    "rollout_steps=32",
    "envs_per_worker=2",
    "epochs=1",
    "minibatches=1",
    "hidden_dims=[16]",
    "patch_size=3",
    "map_size=8",
    "num_train_maps=4",
    "max_episode_steps=50",
    "min_geo=0.5",
    "max_geo=2.0",
]

# small maps that a [32, 32] policy masters within a few hundred thousand steps
LEARN = [
    "rollout_steps=64",
    "envs_per_worker=4",
    "hidden_dims=[32,32]",
    "patch_size=3",
    "map_size=8",
    "num_train_maps=8",
    "num_eval_maps=4",
    "max_episode_steps=60",
    "min_geo=0.5",
    "max_geo=2.0",
    "checkpoint_interval=1000",
]


@pytest.fixture(scope="module")
def reference() -> Dict[str, Any]:
    with open(os.path.join(REFERENCE, "acceptance.yaml"), encoding="utf8") as file:
        return yaml.safe_load(file.read())


@pytest.fixture(autouse=True)
def importable(monkeypatch):
    path = os.environ.get("PYTHONPATH")
    monkeypatch.setenv("PYTHONPATH", ROOT + (os.pathsep + path if path else ""))


def delay_overrides(delay: Dict[str, Any]) -> List[str]:
    return [f"delay.{key}={value}" for key, value in delay.items()]


def cell(reports: Sequence[BenchReport], world_size: int, p: float) -> BenchReport:
    (report,) = [r for r in reports if r.world_size == world_size and r.p == p]
    return report


def train_run(
    out: str,
    world_size: int,
    overrides: Sequence[str],
    config_path: Optional[str] = None,
) -> str:
    assert launch(config_path, world_size, [*overrides, f"output_dir={out}"]) == 0
    return checkpoint_path(out)


def heldout_report(
    ckpt: str,
    overrides: Sequence[str],
    num_episodes: int,
    config_path: Optional[str] = None,
) -> EvalReport:
    return evaluate(ckpt, load_config(config_path, overrides), num_episodes=num_episodes)


def test_homogeneous_scaling(tmp_path, reference):
    ref = reference["scaling"]
    if (psutil.cpu_count(logical=False) or 0) < ref["min_cpus"]:
        pytest.skip(f"needs {ref['min_cpus']} physical cores")
    reports = bench_scaling(
        None,
        ref["world_sizes"],
        [1.0],
        seeds=range(ref["seeds"]),
        output_dir=str(tmp_path / "bench"),
        overrides=BENCH + delay_overrides(ref["delay"]),
    )
    for world_size in ref["world_sizes"]:
        report = cell(reports, world_size, 1.0)
        assert report.mean_relative >= ref["min_efficiency"][world_size] * world_size


def test_preemption_speeds_up_heterogeneous_workload(tmp_path, reference):
    ref = reference["preemption_benefit"]
    fast_p, full_p = ref["p"]
    reports = bench_scaling(
        None,
        [ref["world_size"]],
        ref["p"],
        seeds=range(ref["seeds"]),
        output_dir=str(tmp_path / "bench"),
        overrides=BENCH + delay_overrides(ref["delay"]),
    )
    fast = cell(reports, ref["world_size"], fast_p)
    full = cell(reports, ref["world_size"], full_p)
    assert fast.mean_steps_per_sec / full.mean_steps_per_sec > ref["min_speedup"]
    # bootstrapped 95% intervals do not overlap
    assert fast.ci_low > full.ci_high


def test_preemption_does_not_degrade_learning(tmp_path, reference):
    ref = reference["preemption_no_degradation"]
    success: Dict[float, List[float]] = {0.6: [], 1.0: []}
    for seed in range(ref["seeds"]):
        for p in success:
            overrides = LEARN + [
                f"seed={seed}",
                f"p_preempt={p}",
                f"total_steps={ref['total_steps']}",
                "delay.kind=homogeneous",
                "delay.mu=0.0005",
            ]
            ckpt = train_run(str(tmp_path / f"p{p}-s{seed}"), ref["world_size"], overrides)
            success[p].append(heldout_report(ckpt, overrides, 100).success_rate)
    assert abs(np.mean(success[0.6]) - np.mean(success[1.0])) <= ref["max_success_gap"]


def test_learns_pointnav_at_desk_scale(tmp_path, reference):
    ref = reference["desk_learning"]
    config_path = os.path.join(ROOT, ref["config"])
    out = str(tmp_path / "desk")
    ckpt = train_run(out, ref["world_size"], [], config_path)
    report = heldout_report(ckpt, [], ref["eval_episodes"], config_path)
    summary = report.summary()
    atomic_write(os.path.join(out, "acceptance.json"), dumps(summary))

    assert summary["success"] >= ref["threshold"]["success"]
    assert summary["spl"] >= ref["threshold"]["spl"]


def test_finetune_beats_scratch_on_flee(tmp_path, reference):
    ref = reference["flee_transfer"]
    scores: Dict[str, List[float]] = {"scratch": [], "finetune": []}
    for seed in range(ref["seeds"]):
        pretrained = train_run(
            str(tmp_path / f"pointnav-s{seed}"),
            1,
            LEARN + [f"seed={seed}", f"total_steps={ref['pretrain_steps']}"],
        )
        for mode in scores:
            overrides = LEARN + [
                "task=flee",
                f"seed={seed}",
                f"total_steps={ref['total_steps']}",
                f"transfer_mode={mode}",
            ]
            if mode != "scratch":
                overrides.append(f"pretrained={pretrained}")
            ckpt = train_run(str(tmp_path / f"flee-{mode}-s{seed}"), 1, overrides)
            report = heldout_report(ckpt, overrides, ref["eval_episodes"])
            scores[mode].append(report.mean_score)
    # mean final flee distance over seeds
    assert np.mean(scores["finetune"]) > np.mean(scores["scratch"])
