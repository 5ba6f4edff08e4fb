"""
CLI worker (internal, started by launch/bench)
"""
import os
import sys
from typing import Optional, Sequence

import click

from .. import init_logging
from ..config_utils import load_config
from ..distrib import WorkerGroup
from ..exceptions import DdppoError
from ..harness.bench import run_bench_worker
from ..harness.launcher import BENCH_MODE, TRAIN_MODE, WORKER_MODES
from ..trainer import connect, train
from ..utils import get_logger
from .utils import overrides_option


@click.command("worker", short_help="Run one rank (wired via DDPPO_* variables).")
@click.option("-c", "--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option(
    "-m",
    "--mode",
    type=click.Choice(WORKER_MODES, case_sensitive=False),
    default=TRAIN_MODE,
    show_default=True,
)
@overrides_option
def worker_cmd(config_path: Optional[str], mode: str, overrides: Sequence[str]) -> None:
    """Rank, world size, KV address and peer addresses come from DDPPO_RANK,
    DDPPO_WORLD_SIZE, DDPPO_KV_ADDR and DDPPO_PEER_ADDRS."""

    try:
        group = WorkerGroup.from_env()
        config = load_config(config_path, overrides)
        init_logging(
            log_file=os.path.join(config.output_dir, "logs", f"worker-{group.rank}.log")
        )
        logger = get_logger("cli.worker", group.detail)
        logger.info("Starting %s worker, seed %d", mode, config.seed)
        if mode == BENCH_MODE:
            with connect(config, group) as handle:
                run_bench_worker(config, handle)
        else:
            result = train(config, group)
            logger.info("Finished after %d iterations", result.iterations)
    except DdppoError as e:
        get_logger("cli.worker").error("%s", e.message)
        sys.exit(1)
