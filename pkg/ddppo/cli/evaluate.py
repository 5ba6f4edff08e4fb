"""
CLI evaluation of checkpoints and scripted agents.
"""
from typing import List, Optional, Sequence, Union

import click
from tabulate import tabulate

from ..config_utils import TrainConfig, build_config, load_config
from ..envs import HELDOUT_SPLIT, TRAIN_SPLIT
from ..exceptions import DdppoError
from ..harness.agents import Agent, ShortestPathAgent, StopAgent
from ..harness.evaluate import aggregate_bins, evaluate
from ..nn import Checkpoint, load_checkpoint
from .utils import overrides_option, validate_bin_edges

AGENTS = ("policy", "shortest-path", "stop")


def _config(
    ckpt: Optional[Checkpoint], config_path: Optional[str], overrides: Sequence[str]
) -> TrainConfig:
    if config_path or ckpt is None or "config" not in ckpt.extra:
        return load_config(config_path, overrides)
    return build_config(ckpt.extra["config"], overrides)


@click.command("eval", short_help="Evaluate a checkpoint on a map split.")
@click.argument("checkpoint", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("-c", "--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--split",
    type=click.Choice((TRAIN_SPLIT, HELDOUT_SPLIT)),
    default=HELDOUT_SPLIT,
    show_default=True,
)
@click.option("-e", "--episodes", type=click.IntRange(min=1), default=100, show_default=True)
@click.option(
    "--samples",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Stochastic repeats per episode.",
)
@click.option("--sampled", is_flag=True, default=False, help="Sample instead of argmax.")
@click.option(
    "--agent",
    "agent_name",
    type=click.Choice(AGENTS),
    default="policy",
    show_default=True,
)
@click.option("-o", "--output", default=None, help="Per-episode JSONL output.")
@click.option("--bins", callback=validate_bin_edges, default=None, help="e.g. 1,2,4,6,8")
@overrides_option
@click.pass_context
# pylint: disable=too-many-arguments,too-many-locals
def eval_cmd(
    ctx: click.Context,
    checkpoint: Optional[str],
    config_path: Optional[str],
    split: str,
    episodes: int,
    samples: int,
    sampled: bool,
    agent_name: str,
    output: Optional[str],
    bins: List[float],
    overrides: Sequence[str],
) -> None:
    """Success, SPL and task score of CHECKPOINT (or a scripted agent)."""

    try:
        ckpt = load_checkpoint(checkpoint) if checkpoint else None
        config = _config(ckpt, config_path, overrides)
        source: Union[Checkpoint, Agent]
        if agent_name == "shortest-path":
            source = ShortestPathAgent()
        elif agent_name == "stop":
            source = StopAgent()
        elif ckpt is None:
            raise click.UsageError("CHECKPOINT is required for the policy agent")
        else:
            source = ckpt
        report = evaluate(
            source, config, split, episodes, samples, greedy=not sampled, episodes_path=output
        )
    except DdppoError as e:
        click.echo(e.message, err=True)
        ctx.exit(1)

    summary = report.summary()
    print(tabulate(summary.items(), headers=("Metric", "Value"), tablefmt="plain"))
    if bins:
        print()
        table = aggregate_bins(report, bins)
        print(tabulate(table, headers="keys", tablefmt="plain", showindex=False))
