"""
CLI maps
"""
import os
from typing import Optional, Sequence

import click

from ..config_utils import load_config
from ..envs import HELDOUT_SPLIT, TRAIN_SPLIT, map_split, save_map
from ..file_utils import create_dir
from .utils import overrides_option


@click.command("maps", short_help="Write the generated maps as text files.")
@click.argument("config-path", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--split", type=click.Choice((TRAIN_SPLIT, HELDOUT_SPLIT)), default=TRAIN_SPLIT
)
@click.option("-o", "--out-dir", default="maps", show_default=True)
@overrides_option
def maps_cmd(
    config_path: Optional[str], split: str, out_dir: str, overrides: Sequence[str]
) -> None:
    """Dump the train or held-out maps of a config."""

    config = load_config(config_path, overrides)
    count = config.num_train_maps if split == TRAIN_SPLIT else config.num_eval_maps
    create_dir(out_dir)
    for grid in map_split(
        split, count, config.map_size, config.obstacle_density, config.seed, config.cell_size
    ):
        save_map(grid, os.path.join(out_dir, f"{grid.map_id}.txt"))
    print(f"Wrote {count} {split} maps to {out_dir}")
