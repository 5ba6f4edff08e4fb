"""Scaling benchmark.

Every (N, p) cell runs the same seeds. A trial is 10 collect+optimise cycles;
throughput is the group's total steps over the last 5 cycles divided by the
wall-clock between two group barriers, measured on rank 0. Steps of preempted
rollouts count.
"""
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tabulate import tabulate

from ..config_utils import TrainConfig, load_config
from ..distrib import CollectiveHandle
from ..file_utils import atomic_write, create_dir, dumps, loads
from ..trainer import make_worker
from ..utils import get_logger
from .launcher import BENCH_MODE, launch

logger = get_logger("harness.bench")

BENCH_CYCLES = 10
WARMUP_CYCLES = 5
DEFAULT_SEEDS = tuple(range(10))
RESULT_FILE = "bench.json"
TRIALS_FILE = "bench.csv"
TRIAL_COLUMNS = ("world_size", "p", "seed", "steps_per_sec", "relative")

LaunchFn = Callable[[Optional[str], int, Sequence[str], str], int]


def run_bench_worker(
    config: TrainConfig,
    handle: CollectiveHandle,
    cycles: int = BENCH_CYCLES,
    warmup: int = WARMUP_CYCLES,
) -> Optional[Mapping[str, Any]]:
    """Benchmark body of one rank; rank 0 returns (and writes) the result."""

    if not 0 <= warmup < cycles:
        raise ValueError("need 0 <= warmup < cycles")
    worker = make_worker(config, handle)
    steps = 0
    start = 0.0
    for cycle in range(cycles):
        if cycle == warmup:
            handle.barrier("bench.start")
            start = time.perf_counter()
        stats = worker.train_iteration()
        if cycle >= warmup:
            steps += stats.steps_total
    handle.barrier("bench.end")
    elapsed = time.perf_counter() - start
    if handle.rank != 0:
        return None
    result = {
        "world_size": handle.world_size,
        "p": config.p_preempt,
        "seed": config.seed,
        "workload": config.delay.kind,
        "steps": steps,
        "elapsed": elapsed,
        "steps_per_sec": steps / elapsed if elapsed > 0 else 0.0,
    }
    atomic_write(os.path.join(config.output_dir, RESULT_FILE), dumps(result))
    return result


def bootstrap_ci(
    values: Sequence[float],
    rng: np.random.Generator,
    num_resamples: int = 1000,
    level: float = 0.95,
) -> Tuple[float, float]:
    """Percentile bootstrap interval of the mean."""

    data = np.asarray(values, dtype=np.float64)
    if data.size == 0:
        return float("nan"), float("nan")
    if data.size == 1:
        return float(data[0]), float(data[0])
    idx = rng.integers(0, data.size, size=(num_resamples, data.size))
    means = data[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    return float(np.quantile(means, alpha)), float(np.quantile(means, 1.0 - alpha))


@dataclass
class BenchReport:
    # pylint: disable=too-many-instance-attributes
    world_size: int
    p: float
    workload: str
    steps_per_sec: List[float] = field(default_factory=list)
    relative: List[float] = field(default_factory=list)
    mean_steps_per_sec: float = 0.0
    mean_relative: float = 0.0
    ci_low: float = 0.0
    ci_high: float = 0.0
    rel_ci_low: float = 0.0
    rel_ci_high: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def relative_throughput(trials: pd.DataFrame) -> pd.DataFrame:
    """Add ``relative``: steps/sec over the N=1 trial of the same seed and p."""

    base = trials[trials["world_size"] == 1].set_index(["seed", "p"])["steps_per_sec"]
    if base.empty:
        raise ValueError("relative throughput needs N=1 trials")
    trials = trials.copy()
    keys = list(zip(trials["seed"], trials["p"]))
    trials["relative"] = [
        sps / base.loc[key] for sps, key in zip(trials["steps_per_sec"], keys)
    ]
    return trials


def build_reports(trials: pd.DataFrame, workload: str, seed: int = 0) -> List[BenchReport]:
    rng = np.random.default_rng(seed)
    reports = []
    for (world_size, p), cell in trials.groupby(["world_size", "p"], sort=True):
        sps = cell["steps_per_sec"].tolist()
        rel = cell["relative"].tolist()
        lo, hi = bootstrap_ci(sps, rng)
        rel_lo, rel_hi = bootstrap_ci(rel, rng)
        reports.append(
            BenchReport(
                world_size=int(world_size),
                p=float(p),
                workload=workload,
                steps_per_sec=sps,
                relative=rel,
                mean_steps_per_sec=float(np.mean(sps)),
                mean_relative=float(np.mean(rel)),
                ci_low=lo,
                ci_high=hi,
                rel_ci_low=rel_lo,
                rel_ci_high=rel_hi,
            )
        )
    return reports


def format_reports(reports: Sequence[BenchReport]) -> str:
    rows = [
        (
            r.world_size,
            r.p,
            r.workload,
            f"{r.mean_steps_per_sec:.1f}",
            f"[{r.ci_low:.1f}, {r.ci_high:.1f}]",
            f"{r.mean_relative:.3f}",
            f"[{r.rel_ci_low:.3f}, {r.rel_ci_high:.3f}]",
        )
        for r in reports
    ]
    headers = ("N", "p", "Workload", "Steps/s", "95% CI", "Relative", "95% CI")
    return tabulate(rows, headers=headers, tablefmt="plain")


def _run_trial(
    config_path: Optional[str],
    overrides: Sequence[str],
    world_size: int,
    p: float,
    seed: int,
    trial_dir: str,
    launch_fn: LaunchFn,
) -> float:
    trial_overrides = [
        *overrides,
        f"seed={seed}",
        f"p_preempt={p}",
        f"output_dir={trial_dir}",
    ]
    launch_fn(config_path, world_size, trial_overrides, BENCH_MODE)
    with open(os.path.join(trial_dir, RESULT_FILE), "rb") as fd:
        result = loads(fd.read())
    logger.info(
        "N=%d p=%.2f seed=%d: %.1f steps/s", world_size, p, seed, result["steps_per_sec"]
    )
    return float(result["steps_per_sec"])


# pylint: disable=too-many-arguments,too-many-locals
def bench_scaling(
    config_path: Optional[str],
    world_sizes: Sequence[int],
    p_values: Sequence[float],
    seeds: Sequence[int] = DEFAULT_SEEDS,
    output_dir: str = "runs/bench",
    overrides: Sequence[str] = (),
    launch_fn: LaunchFn = launch,
) -> List[BenchReport]:
    """Run every (N, p, seed) trial and write ``bench.csv``.

    The N=1 baseline runs once per seed and serves every p.
    """

    config = load_config(config_path, overrides)
    sizes = sorted(set(world_sizes) | {1})
    create_dir(output_dir)
    rows = []
    for seed in seeds:
        baseline: Optional[float] = None
        for world_size in sizes:
            for p in p_values:
                if world_size == 1 and baseline is not None:
                    sps = baseline
                else:
                    trial_dir = os.path.join(output_dir, f"n{world_size}-p{p}-s{seed}")
                    sps = _run_trial(
                        config_path, overrides, world_size, p, seed, trial_dir, launch_fn
                    )
                    if world_size == 1:
                        baseline = sps
                rows.append(
                    {
                        "world_size": world_size,
                        "p": float(p),
                        "seed": seed,
                        "steps_per_sec": sps,
                    }
                )
    trials = relative_throughput(pd.DataFrame(rows))
    trials.to_csv(
        os.path.join(output_dir, TRIALS_FILE), columns=list(TRIAL_COLUMNS), index=False
    )
    reports = build_reports(trials, config.delay.kind)
    with open(os.path.join(output_dir, "bench-summary.txt"), "w", encoding="utf8") as fd:
        fd.write(format_reports(reports) + "\n")
    return reports
