"""Worker group membership: rendezvous, ring set-up and barriers."""
import os
import socket
import time
from dataclasses import dataclass, field
from typing import List, Mapping, Optional, Sequence

from ..config_utils import variable_name
from ..exceptions import (
    BarrierTimeoutError,
    ConfigurationError,
    DuplicateRankError,
    LayoutMismatchError,
    PeerDisconnectedError,
    ProtocolError,
    RendezvousTimeoutError,
)
from ..utils import get_logger, rank_detail
from . import wire
from .ring import CollectiveHandle
from .store import KvClient, iteration_key

RANK_KEY = "rdzv.rank"
WORLD_SIZE_KEY = "rdzv.world_size"
LAYOUT_KEY = "rdzv.layout"
ARRIVED_KEY = "rdzv.arrived"

_POLL_MIN = 0.0005
_POLL_MAX = 0.01


@dataclass(frozen=True)
class WorkerGroup:
    rank: int
    world_size: int
    peer_addresses: Sequence[str] = field(default_factory=tuple)
    kv_address: Optional[str] = None

    def __post_init__(self) -> None:
        if self.world_size < 1:
            raise ConfigurationError("world_size", "must be >= 1")
        if not 0 <= self.rank < self.world_size:
            raise ConfigurationError("rank", f"{self.rank} not in [0, {self.world_size})")
        if self.world_size > 1:
            if len(self.peer_addresses) != self.world_size:
                raise ConfigurationError(
                    "peer_addresses",
                    f"expected {self.world_size} addresses, got {len(self.peer_addresses)}",
                )
            if not self.kv_address:
                raise ConfigurationError("kv_address", "required for world size > 1")

    @property
    def detail(self) -> str:
        return rank_detail(self.rank, self.world_size)

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "WorkerGroup":
        """Read ``DDPPO_RANK``, ``DDPPO_WORLD_SIZE``, ``DDPPO_KV_ADDR`` and
        ``DDPPO_PEER_ADDRS`` (comma separated, indexed by rank)."""

        env = os.environ if environ is None else environ
        try:
            rank = int(env.get(variable_name("RANK"), "0"))
            world_size = int(env.get(variable_name("WORLD_SIZE"), "1"))
        except ValueError as e:
            raise ConfigurationError("rank", f"non-integer rank or world size: {e}") from e
        peers = [p for p in env.get(variable_name("PEER_ADDRS"), "").split(",") if p]
        return cls(rank, world_size, tuple(peers), env.get(variable_name("KV_ADDR")) or None)

    def to_env(self) -> Mapping[str, str]:
        env = {
            variable_name("RANK"): str(self.rank),
            variable_name("WORLD_SIZE"): str(self.world_size),
            variable_name("PEER_ADDRS"): ",".join(self.peer_addresses),
        }
        if self.kv_address:
            env[variable_name("KV_ADDR")] = self.kv_address
        return env


def _sleep(delay: float) -> float:
    time.sleep(delay)
    return min(delay * 2, _POLL_MAX)


def barrier(store: KvClient, name: str, world_size: int, timeout: float = 300.0) -> None:
    """Return once ``world_size`` workers have arrived at ``name``.

    The arrival counter doubles as a generation counter, so a name can be
    reused: the k-th use completes when the counter reaches ``k * N``.
    """

    if world_size == 1:
        return
    key = name if name.startswith("barrier.") else f"barrier.{name}"
    arrival = store.add(key, 1)
    target = ((arrival - 1) // world_size + 1) * world_size
    deadline = time.monotonic() + timeout
    delay = _POLL_MIN
    count = arrival
    while count < target:
        if time.monotonic() > deadline:
            raise BarrierTimeoutError(name, count - (target - world_size), world_size)
        delay = _sleep(delay)
        count = store.get_counter(key)


def _listen(address: str) -> socket.socket:
    host, port = wire.parse_address(address)
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((host, port))
    server.listen(1)
    return server


def _connect(address: str, deadline: float) -> socket.socket:
    host, port = wire.parse_address(address)
    while True:
        try:
            return socket.create_connection((host, port), timeout=1.0)
        except OSError:
            if time.monotonic() > deadline:
                raise
            time.sleep(0.05)


def _missing_ranks(store: KvClient, world_size: int) -> List[int]:
    return [r for r in range(world_size) if store.get(f"{RANK_KEY}.{r}") is None]


# pylint: disable=too-many-locals
def rendezvous(
    group: WorkerGroup,
    layout_hash: int,
    store: Optional[KvClient] = None,
    timeout: float = 60.0,
    barrier_timeout: float = 300.0,
) -> CollectiveHandle:
    """Join the group and connect the ring ``rank -> rank + 1``.

    Returns only after all N workers arrived and agreed on world size and
    parameter layout.

    Raises:
        DuplicateRankError: another worker already claimed this rank.
        RendezvousTimeoutError: not every rank arrived within ``timeout``.
        LayoutMismatchError: a peer's parameter layout differs.
    """

    log = get_logger("distrib.group", group.detail)
    if group.world_size == 1:
        log.info("Single worker, ring of self")
        return CollectiveHandle(group, store=store, barrier_timeout=barrier_timeout)
    if store is None:
        assert group.kv_address is not None
        store = KvClient(group.kv_address)

    if store.add(f"{RANK_KEY}.{group.rank}", 1) > 1:
        log.error("Rank %d already claimed", group.rank)
        raise DuplicateRankError(group.rank)
    listener = _listen(group.peer_addresses[group.rank])
    try:
        store.set(f"{WORLD_SIZE_KEY}.{group.rank}", wire.encode_counter(group.world_size))
        store.set(f"{LAYOUT_KEY}.{group.rank}", layout_hash.to_bytes(8, "little"))
        store.add(ARRIVED_KEY, 1)

        deadline = time.monotonic() + timeout
        delay = _POLL_MIN
        while store.get_counter(ARRIVED_KEY) < group.world_size:
            if time.monotonic() > deadline:
                missing = _missing_ranks(store, group.world_size)
                log.error("Rendezvous timed out, missing ranks %s", missing)
                raise RendezvousTimeoutError(missing, timeout)
            delay = _sleep(delay)

        for rank in range(group.world_size):
            size = store.get(f"{WORLD_SIZE_KEY}.{rank}")
            if size is None or wire.decode_counter(size) != group.world_size:
                raise ProtocolError(f"rank {rank} disagrees on world size")
            raw = store.get(f"{LAYOUT_KEY}.{rank}")
            other = int.from_bytes(raw or b"", "little")
            if other != layout_hash:
                raise LayoutMismatchError(layout_hash, other)

        next_rank = (group.rank + 1) % group.world_size
        prev_rank = (group.rank - 1) % group.world_size
        deadline = time.monotonic() + timeout
        send_sock = _connect(group.peer_addresses[next_rank], deadline)
        wire.send_frame(send_sock, wire.encode_counter(group.rank))
        listener.settimeout(max(deadline - time.monotonic(), 0.1))
        try:
            recv_sock, _ = listener.accept()
        except socket.timeout as e:
            raise RendezvousTimeoutError([prev_rank], timeout) from e
        hello = wire.decode_counter(wire.recv_frame(recv_sock))
        if hello != prev_rank:
            raise ProtocolError(f"expected ring peer {prev_rank}, got {hello}")
    finally:
        listener.close()

    for sock in (send_sock, recv_sock):
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        sock.settimeout(barrier_timeout)
    handle = CollectiveHandle(group, send_sock, recv_sock, store, barrier_timeout)
    handle.barrier("rdzv.ready")
    log.info("Rendezvous complete, ring %d -> %d -> %d", prev_rank, group.rank, next_rank)
    return handle


def verify_consistent(handle: CollectiveHandle, iteration: int, digest: str) -> None:
    """Compare a parameter digest across ranks through the store."""

    if handle.world_size == 1 or handle.store is None:
        return
    store = handle.store
    store.set(iteration_key("hash", iteration, handle.rank), digest.encode("ascii"))
    barrier(
        store,
        iteration_key("barrier", iteration, "hash"),
        handle.world_size,
        handle.barrier_timeout,
    )
    for rank in range(handle.world_size):
        other = store.get(iteration_key("hash", iteration, rank))
        if other is None:
            raise PeerDisconnectedError(rank, "no parameter digest")
        if other.decode("ascii") != digest:
            raise ProtocolError(
                f"parameters diverged at iteration {iteration}: rank {rank} "
                f"has {other.decode('ascii')}, rank {handle.rank} has {digest}"
            )
