from typing import Any, List, Sequence

import click
from click import Context, Parameter

from ..config_utils import parse_override
from ..exceptions import ConfigurationError


# pylint: disable=unused-argument
def validate_overrides(ctx: Context, param: Parameter, values: Any) -> Sequence[str]:
    for item in values or ():
        try:
            parse_override(item)
        except ConfigurationError as e:
            raise click.BadParameter(e.message) from e
    return tuple(values or ())


# pylint: disable=unused-argument
def validate_bin_edges(ctx: Context, param: Parameter, value: Any) -> List[float]:
    if value is None:
        return []
    try:
        edges = [float(v) for v in str(value).split(",") if v.strip()]
    except ValueError as e:
        raise click.BadParameter(f"Expected comma separated numbers: {value}") from e
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise click.BadParameter(f"Need at least two increasing edges: {value}")
    return edges


# pylint: disable=unused-argument
def validate_world_sizes(ctx: Context, param: Parameter, values: Any) -> Sequence[int]:
    sizes = tuple(int(v) for v in values)
    if any(n < 1 for n in sizes):
        raise click.BadParameter("world sizes must be >= 1")
    return sizes


# pylint: disable=unused-argument
def validate_fractions(ctx: Context, param: Parameter, values: Any) -> Sequence[float]:
    fractions = tuple(float(v) for v in values)
    if any(not 0 < p <= 1 for p in fractions):
        raise click.BadParameter("preemption thresholds must be in (0, 1]")
    return fractions


def overrides_option(func: Any) -> Any:
    return click.option(
        "-s",
        "--set",
        "overrides",
        multiple=True,
        callback=validate_overrides,
        metavar="KEY=VALUE",
        help="Override a config variable (repeatable), e.g. delay.kind=homogeneous.",
    )(func)
