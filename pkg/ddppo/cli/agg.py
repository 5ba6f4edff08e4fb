"""
CLI agg
"""
from typing import List, Optional

import click
from tabulate import tabulate

from ..harness.evaluate import EvalReport, aggregate_bins
from .utils import validate_bin_edges


@click.command("agg", short_help="Aggregate episode rows by geodesic distance.")
@click.argument("episodes", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--bins",
    callback=validate_bin_edges,
    default="1,2,3,4,5,6,7,8",
    show_default=True,
    help="Comma separated bin edges in meters.",
)
@click.option("-o", "--output", default=None, help="Write the binned table as CSV.")
def agg_cmd(episodes: str, bins: List[float], output: Optional[str]) -> None:
    """Per-bin episode fraction, success, SPL and score of an EPISODES JSONL file."""

    report = EvalReport.from_jsonl(episodes)
    binned = aggregate_bins(report, bins)
    if output:
        binned.to_csv(output, index=False)
    print(tabulate(binned, headers="keys", tablefmt="plain", showindex=False))
