"""Launching, benchmarking and evaluation around the trainer."""

from .agents import Agent, PolicyAgent, ShortestPathAgent, StopAgent
from .bench import BenchReport, bench_scaling, bootstrap_ci, relative_throughput
from .evaluate import EvalReport, aggregate_bins, evaluate
from .launcher import BENCH_MODE, TRAIN_MODE, Launcher, launch

__all__ = [
    "Agent",
    "BENCH_MODE",
    "BenchReport",
    "EvalReport",
    "Launcher",
    "PolicyAgent",
    "ShortestPathAgent",
    "StopAgent",
    "TRAIN_MODE",
    "aggregate_bins",
    "bench_scaling",
    "bootstrap_ci",
    "evaluate",
    "launch",
    "relative_throughput",
]
