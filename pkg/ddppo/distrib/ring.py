"""Ring AllReduce over TCP.

Each rank holds one outgoing socket to ``rank + 1`` and one incoming socket
from ``rank - 1``. A reduction runs over ``ceil(len / N)``-sized chunks: a
pipelined reduce pass that accumulates every chunk in ascending rank order,
then a gather pass that copies the finished bytes to every rank. Results equal
the serial sum ``((v0 + v1) + v2) + ...`` bit for bit and are identical on all
ranks. Each link carries every chunk at most once per pass.
"""
import math
import socket
from concurrent.futures import Future, ThreadPoolExecutor
from typing import TYPE_CHECKING, List, Optional

import numpy as np

from ..exceptions import PeerDisconnectedError, ProtocolError
from ..utils import get_logger, rank_detail
from . import wire

if TYPE_CHECKING:
    from .group import WorkerGroup
    from .store import KvClient


def chunk_bounds(length: int, world_size: int) -> List[slice]:
    size = math.ceil(length / world_size) if length else 0
    return [
        slice(min(c * size, length), min((c + 1) * size, length)) for c in range(world_size)
    ]


class CollectiveHandle:
    """Connected ring returned by :func:`ddppo.distrib.group.rendezvous`.

    Collective calls block and must be issued by all ranks in the same order.
    """

    # pylint: disable=too-many-instance-attributes
    def __init__(
        self,
        group: "WorkerGroup",
        send_sock: Optional[socket.socket] = None,
        recv_sock: Optional[socket.socket] = None,
        store: Optional["KvClient"] = None,
        barrier_timeout: float = 300.0,
    ) -> None:
        self.group = group
        self.store = store
        self.barrier_timeout = barrier_timeout
        self._send_sock = send_sock
        self._recv_sock = recv_sock
        self._sender: Optional[ThreadPoolExecutor] = None
        if group.world_size > 1:
            if send_sock is None or recv_sock is None:
                raise ProtocolError("ring sockets missing for world size > 1")
            self._sender = ThreadPoolExecutor(max_workers=1, thread_name_prefix="ring-send")
        # network operations issued by this handle (frames sent + received)
        self.transport_calls = 0
        self.bytes_sent = 0
        self.logger = get_logger("distrib.ring", rank_detail(group.rank, group.world_size))

    @property
    def rank(self) -> int:
        return self.group.rank

    @property
    def world_size(self) -> int:
        return self.group.world_size

    @property
    def next_rank(self) -> int:
        return (self.rank + 1) % self.world_size

    @property
    def prev_rank(self) -> int:
        return (self.rank - 1) % self.world_size

    # -- transport -------------------------------------------------------

    def _send_async(self, payload: bytes) -> "Future[None]":
        assert self._sender is not None and self._send_sock is not None
        self.transport_calls += 1
        self.bytes_sent += len(payload)
        return self._sender.submit(wire.send_frame, self._send_sock, payload)

    def _wait_sent(self, future: "Future[None]") -> None:
        try:
            future.result()
        except OSError as e:
            raise PeerDisconnectedError(self.next_rank, str(e)) from e

    def _recv(self) -> bytes:
        assert self._recv_sock is not None
        self.transport_calls += 1
        try:
            return wire.recv_frame(self._recv_sock)
        except socket.timeout as e:
            raise PeerDisconnectedError(self.prev_rank, "timed out") from e
        except (OSError, ConnectionError) as e:
            raise PeerDisconnectedError(self.prev_rank, str(e)) from e

    def _exchange(self, payload: bytes) -> bytes:
        future = self._send_async(payload)
        try:
            received = self._recv()
        finally:
            self._wait_sent(future)
        return received

    # -- collectives -----------------------------------------------------

    def _check_length(self, length: int) -> None:
        received = wire.decode_length_header(self._exchange(wire.encode_length_header(length)))
        if received is None:
            raise ProtocolError("expected a length header frame")
        if received != length:
            raise ProtocolError(
                f"vector length mismatch: rank {self.prev_rank} has {received}, "
                f"rank {self.rank} has {length}"
            )

    def _recv_chunk(self, expected: int, size: int) -> np.ndarray:
        idx, chunk = wire.decode_chunk(self._recv())
        if idx != expected or chunk.size != size:
            raise ProtocolError(f"unexpected chunk {idx} (wanted {expected} of size {size})")
        return chunk

    def _wait_all(self, pending: List["Future[None]"]) -> None:
        for future in pending:
            self._wait_sent(future)

    def allreduce_sum(self, vec: np.ndarray) -> np.ndarray:
        """Elementwise sum over ranks, identical on every rank.

        Reduce pass: chunk ``c`` leaves rank 0 and travels ``0 -> 1 -> ... -> N-1``,
        each rank adding its own slice to the incoming partial, so every element
        is ``((v0 + v1) + v2) + ...``. Chunks are pipelined: rank ``r`` works on
        chunk ``c`` while rank ``r + 1`` works on chunk ``c - 1``. Gather pass: the
        finished chunks travel ``N-1 -> 0 -> ... -> N-2``.
        """

        values = np.array(vec, dtype=np.float64).ravel()
        num = self.world_size
        if num == 1:
            return values
        self._check_length(values.size)
        bounds = chunk_bounds(values.size, num)
        last = num - 1

        pending: List["Future[None]"] = []
        for c, part in enumerate(bounds):
            if self.rank > 0:
                partial = self._recv_chunk(c, values[part].size)
                values[part] = partial + values[part]
            if self.rank < last:
                pending.append(self._send_async(wire.encode_chunk(c, values[part])))
        self._wait_all(pending)

        pending = []
        for c, part in enumerate(bounds):
            if self.rank != last:
                values[part] = self._recv_chunk(c, values[part].size)
            if self.rank != last - 1:
                pending.append(self._send_async(wire.encode_chunk(c, values[part])))
        self._wait_all(pending)
        return values

    def allreduce_mean(self, vec: np.ndarray) -> np.ndarray:
        """``(1/N) * sum`` over ranks; N=1 is the identity with no network use."""

        if self.world_size == 1:
            return np.array(vec, dtype=np.float64).ravel()
        return self.allreduce_sum(vec) * (1.0 / self.world_size)

    def barrier(self, name: str) -> None:
        if self.world_size == 1:
            return
        if self.store is None:
            raise ProtocolError("barrier needs a key-value store")
        # pylint: disable=import-outside-toplevel,cyclic-import
        from .group import barrier

        barrier(self.store, name, self.world_size, self.barrier_timeout)

    def close(self) -> None:
        if self._sender is not None:
            self._sender.shutdown(wait=False)
            self._sender = None
        for sock in (self._send_sock, self._recv_sock):
            if sock is not None:
                try:
                    sock.close()
                except OSError:
                    pass
        self._send_sock = self._recv_sock = None
        if self.store is not None:
            self.store.close()

    def __enter__(self) -> "CollectiveHandle":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def allreduce_mean(handle: CollectiveHandle, vec: np.ndarray) -> np.ndarray:
    return handle.allreduce_mean(vec)
