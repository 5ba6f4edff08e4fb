"""
CLI kv-server (internal, supervised by launch)
"""
import click

from ..distrib import KvServer


@click.command("kv-server", short_help="Run the key-value store.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=click.IntRange(min=0, max=65535), default=0, show_default=True)
def kv_server_cmd(host: str, port: int) -> None:
    """Serve until terminated."""

    KvServer(host, port).serve_forever()
