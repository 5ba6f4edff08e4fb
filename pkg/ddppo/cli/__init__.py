"""CLI commands.
"""

import sys

from click import Command

from .agg import agg_cmd
from .bench import bench_cmd
from .evaluate import eval_cmd
from .kv_server import kv_server_cmd
from .launch import launch_cmd
from .maps import maps_cmd
from .worker import worker_cmd

commands = [
    getattr(sys.modules[__name__], name)
    for name in dir()
    if isinstance(getattr(sys.modules[__name__], name), Command)
]


def main() -> None:
    # pylint: disable=import-outside-toplevel,cyclic-import
    from .. import create_cli_app

    create_cli_app()()
