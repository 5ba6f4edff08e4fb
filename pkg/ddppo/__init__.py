"""
DD-PPO engine
=============

Decentralized distributed PPO: synchronous data-parallel on-policy training
with a ring AllReduce over TCP, a key-value store for coordination and
straggler preemption, on synthetic grid navigation tasks.

Logging is configured from the packaged ``logging.yaml`` or from the file named
by :envvar:`DDPPO_LOGGING_CONF`.
"""

import logging
import logging.config
import os
from typing import TYPE_CHECKING, Optional

# noinspection PyUnresolvedReferences
import colorlog  # pylint: disable=unused-import
import yaml

from .__version__ import __VERSION__
from .config_utils import variable_name

if TYPE_CHECKING:
    import click

VERSION = __VERSION__
LOGGING_CONF = os.path.join(os.path.dirname(__file__), "logging.yaml")
FILE_FORMAT = "%(asctime)s [%(name)s: %(detail)s] %(levelname)s: %(message)s"


def init_logging(log_file: Optional[str] = None, verbose: bool = False) -> None:
    """Load default (logging.yaml) or custom (DDPPO_LOGGING_CONF) logging config.

    Args:
        log_file: (optional) additionally write ``ddppo`` records to this file.
        verbose: show DEBUG records on the console.
    """

    logging_conf = os.environ.get(variable_name("LOGGING_CONF"), LOGGING_CONF)
    with open(logging_conf, encoding="utf8") as file:
        dict_config = yaml.safe_load(file.read())
        logging.config.dictConfig(dict_config)

    logger = logging.getLogger("ddppo")
    if verbose:
        for handler in logger.handlers:
            handler.setLevel(logging.DEBUG)
    if log_file:
        os.makedirs(os.path.dirname(log_file) or ".", exist_ok=True)
        # pylint: disable=import-outside-toplevel
        from .utils import DetailFilter

        file_handler = logging.FileHandler(log_file, encoding="utf8")
        file_handler.setLevel(logging.DEBUG)
        file_handler.addFilter(DetailFilter())
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
        logger.addHandler(file_handler)


def create_cli_app() -> "click.Group":
    """Create the ``ddppo`` command group with every CLI command registered."""

    # pylint: disable=import-outside-toplevel
    import click

    from .cli import commands

    @click.group(help="Decentralized distributed PPO.")
    @click.version_option(VERSION)
    @click.option("-v", "--verbose", is_flag=True, default=False, help="Log DEBUG records.")
    def app(verbose: bool) -> None:
        init_logging(verbose=verbose)

    for command in commands:
        app.add_command(command)
    return app
