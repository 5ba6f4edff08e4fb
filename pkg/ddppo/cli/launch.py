"""
CLI launch
"""
from typing import Optional, Sequence

import click

from ..exceptions import LaunchError
from ..harness.launcher import TRAIN_MODE, launch
from .utils import overrides_option


@click.command("launch", short_help="Train with N local worker processes.")
@click.argument("config-path", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("-n", "--num-workers", type=click.IntRange(min=1), default=1, show_default=True)
@overrides_option
@click.pass_context
def launch_cmd(
    ctx: click.Context,
    config_path: Optional[str],
    num_workers: int,
    overrides: Sequence[str],
) -> None:
    """Start the KV store and NUM_WORKERS workers; exit non-zero on the first
    worker failure."""

    try:
        launch(config_path, num_workers, overrides, TRAIN_MODE)
    except LaunchError as e:
        click.echo(e.message, err=True)
        ctx.exit(e.code or 1)
