"""Local multi-process launcher.

Starts the KV store as a supervised subprocess, spawns N ``worker`` processes
wired through ``DDPPO_*`` environment variables, and tears the whole process
tree down on the first failure.
"""
import os
import socket
import sys
import time
from contextlib import closing
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence

import psutil

from ..config_utils import variable_name
from ..distrib import WorkerGroup
from ..exceptions import LaunchError
from ..utils import get_logger

logger = get_logger("harness.launcher")

TRAIN_MODE = "train"
BENCH_MODE = "bench"
WORKER_MODES = (TRAIN_MODE, BENCH_MODE)


def free_ports(count: int, host: str = "127.0.0.1") -> List[int]:
    """Ports the OS considers free right now (all held open until every one
    is chosen, so they are distinct)."""

    socks = []
    try:
        for _ in range(count):
            sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            sock.bind((host, 0))
            socks.append(sock)
        return [sock.getsockname()[1] for sock in socks]
    finally:
        for sock in socks:
            sock.close()


def wait_for_port(host: str, port: int, timeout: float = 10.0) -> None:
    deadline = time.monotonic() + timeout
    while True:
        try:
            with closing(socket.create_connection((host, port), timeout=0.5)):
                return
        except OSError as e:
            if time.monotonic() > deadline:
                raise LaunchError(f"KV store did not come up on {host}:{port}: {e}") from e
            time.sleep(0.05)


def kill_tree(proc: psutil.Process, timeout: float = 5.0) -> None:
    try:
        procs = proc.children(recursive=True) + [proc]
    except psutil.NoSuchProcess:
        return
    for p in procs:
        try:
            p.terminate()
        except psutil.NoSuchProcess:
            pass
    _, alive = psutil.wait_procs(procs, timeout=timeout)
    for p in alive:
        try:
            p.kill()
        except psutil.NoSuchProcess:
            pass


@dataclass
class WorkerProcess:
    rank: int
    proc: psutil.Popen


class Launcher:
    # pylint: disable=too-many-arguments,too-many-instance-attributes
    def __init__(
        self,
        config_path: Optional[str],
        num_workers: int,
        overrides: Sequence[str] = (),
        mode: str = TRAIN_MODE,
        host: str = "127.0.0.1",
        poll_interval: float = 0.1,
        python: str = sys.executable,
    ) -> None:
        if num_workers < 1:
            raise LaunchError("num_workers must be >= 1")
        if mode not in WORKER_MODES:
            raise LaunchError(f"unknown worker mode '{mode}'")
        self.config_path = config_path
        self.num_workers = num_workers
        self.overrides = tuple(overrides)
        self.mode = mode
        self.host = host
        self.poll_interval = poll_interval
        self.python = python
        self.kv_proc: Optional[psutil.Popen] = None
        self.workers: List[WorkerProcess] = []

    def command(self, *args: str) -> List[str]:
        return [self.python, "-m", "ddppo", *args]

    def worker_command(self) -> List[str]:
        args = ["worker", "--mode", self.mode]
        if self.config_path:
            args += ["--config", self.config_path]
        for item in self.overrides:
            args += ["--set", item]
        return self.command(*args)

    def start_kv(self) -> str:
        (port,) = free_ports(1, self.host)
        self.kv_proc = psutil.Popen(
            self.command("kv-server", "--host", self.host, "--port", str(port))
        )
        wait_for_port(self.host, port)
        address = f"{self.host}:{port}"
        logger.debug("KV store (pid %d) on %s", self.kv_proc.pid, address)
        return address

    def groups(self, kv_address: Optional[str]) -> List[WorkerGroup]:
        peers = (
            tuple(f"{self.host}:{port}" for port in free_ports(self.num_workers, self.host))
            if self.num_workers > 1
            else ()
        )
        return [
            WorkerGroup(rank, self.num_workers, peers, kv_address)
            for rank in range(self.num_workers)
        ]

    def spawn(self, group: WorkerGroup, base_env: Mapping[str, str]) -> WorkerProcess:
        env = dict(base_env)
        env.update(group.to_env())
        return WorkerProcess(group.rank, psutil.Popen(self.worker_command(), env=env))

    def wait(self) -> None:
        """Block until every worker exited 0; raise on the first failure."""

        pending = list(self.workers)
        while pending:
            for worker in list(pending):
                code = worker.proc.poll()
                if code is None:
                    continue
                pending.remove(worker)
                if code != 0:
                    raise LaunchError("worker exited with an error", worker.rank, code)
                logger.debug("Worker rank %d finished", worker.rank)
            if self.kv_proc is not None and self.kv_proc.poll() is not None:
                raise LaunchError(f"KV store exited with {self.kv_proc.returncode}")
            if pending:
                time.sleep(self.poll_interval)

    def shutdown(self) -> None:
        for worker in self.workers:
            kill_tree(worker.proc)
        if self.kv_proc is not None:
            kill_tree(self.kv_proc)
            self.kv_proc = None

    def run(self) -> int:
        cpus = psutil.cpu_count(logical=True) or 1
        if self.num_workers > cpus:
            logger.warning(
                "%d workers on %d CPUs, throughput will not scale", self.num_workers, cpus
            )
        base_env = dict(os.environ)
        base_env.pop(variable_name("KV_ADDR"), None)
        try:
            kv_address = self.start_kv() if self.num_workers > 1 else None
            for group in self.groups(kv_address):
                self.workers.append(self.spawn(group, base_env))
            logger.info("Launched %d worker(s) in %s mode", self.num_workers, self.mode)
            self.wait()
        except LaunchError as e:
            logger.error(e.message)
            raise
        finally:
            self.shutdown()
        return 0


def launch(
    config_path: Optional[str],
    num_workers: int,
    overrides: Sequence[str] = (),
    mode: str = TRAIN_MODE,
) -> int:
    """Run ``num_workers`` local workers to completion.

    Raises:
        LaunchError: a worker (rank attributed) or the KV store failed.
    """

    return Launcher(config_path, num_workers, overrides, mode).run()
