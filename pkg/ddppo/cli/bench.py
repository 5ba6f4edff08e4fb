"""
CLI bench
"""
from typing import Optional, Sequence

import click

from ..exceptions import LaunchError
from ..harness.bench import DEFAULT_SEEDS, bench_scaling, format_reports
from .utils import overrides_option, validate_fractions, validate_world_sizes


@click.command("bench", short_help="Scaling benchmark over world sizes and p.")
@click.argument("config-path", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option(
    "-n",
    "--world-size",
    "world_sizes",
    multiple=True,
    default=(1, 2, 4),
    show_default=True,
    callback=validate_world_sizes,
    help="Number of workers (repeatable); N=1 is always added as baseline.",
)
@click.option(
    "-p",
    "--preempt",
    "p_values",
    multiple=True,
    default=(0.6, 1.0),
    show_default=True,
    callback=validate_fractions,
    help="Preemption threshold (repeatable).",
)
@click.option(
    "--seeds", type=click.IntRange(min=1), default=len(DEFAULT_SEEDS), show_default=True
)
@click.option("-o", "--output-dir", default="runs/bench", show_default=True)
@overrides_option
@click.pass_context
# pylint: disable=too-many-arguments
def bench_cmd(
    ctx: click.Context,
    config_path: Optional[str],
    world_sizes: Sequence[int],
    p_values: Sequence[float],
    seeds: int,
    output_dir: str,
    overrides: Sequence[str],
) -> None:
    """Paired-seed throughput trials; writes OUTPUT_DIR/bench.csv."""

    try:
        reports = bench_scaling(
            config_path, world_sizes, p_values, range(seeds), output_dir, overrides
        )
    except LaunchError as e:
        click.echo(e.message, err=True)
        ctx.exit(e.code or 1)
    print(format_reports(reports))
