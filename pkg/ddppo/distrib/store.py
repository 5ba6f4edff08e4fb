"""TCP key-value store with atomic counters.

The server is a :class:`socketserver.ThreadingTCPServer`; every connection is
served by its own thread and all operations on the table happen under one
lock, which makes SET/GET/ADD linearizable.
"""
import re
import socket
import socketserver
import threading
import time
from typing import Dict, Optional, Tuple

from ..exceptions import ProtocolError, TransportError
from ..utils import get_logger
from . import wire

logger = get_logger("distrib.store")

# per-iteration key families; ``<family>.<iteration>[.<rest>]``
GC_FAMILIES = ("done", "barrier", "hash", "steps")
GC_KEEP = 2
_ITERATION_KEY = re.compile(r"^(?P<family>[a-z_]+)\.(?P<iteration>\d+)(\..*)?$")


def iteration_key(family: str, iteration: int, *parts: object) -> str:
    return ".".join([family, str(iteration), *(str(p) for p in parts)])


class KvTable:
    """Thread-safe table with iteration-keyed garbage collection."""

    def __init__(self, keep: int = GC_KEEP) -> None:
        self.keep = keep
        self._data: Dict[str, bytes] = {}
        self._lock = threading.Lock()
        self._latest_iteration = -1

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)

    def keys(self) -> Tuple[str, ...]:
        with self._lock:
            return tuple(self._data)

    def set(self, key: str, value: bytes) -> None:
        with self._lock:
            self._data[key] = value
            self._track(key)

    def get(self, key: str) -> Optional[bytes]:
        with self._lock:
            return self._data.get(key)

    def add(self, key: str, delta: int) -> int:
        with self._lock:
            current = self._data.get(key)
            value = (wire.decode_counter(current) if current is not None else 0) + delta
            self._data[key] = wire.encode_counter(value)
            self._track(key)
            return value

    def _track(self, key: str) -> None:
        match = _ITERATION_KEY.match(key)
        if not match or match.group("family") not in GC_FAMILIES:
            return
        iteration = int(match.group("iteration"))
        if iteration <= self._latest_iteration:
            return
        self._latest_iteration = iteration
        horizon = iteration - self.keep
        stale = [
            k
            for k in self._data
            if (m := _ITERATION_KEY.match(k))
            and m.group("family") in GC_FAMILIES
            and int(m.group("iteration")) < horizon
        ]
        for k in stale:
            del self._data[k]
        if stale:
            logger.debug("Collected %d keys older than iteration %d", len(stale), horizon)

    def handle(self, payload: bytes) -> bytes:
        try:
            opcode, key, value = wire.decode_request(payload)
            if opcode == wire.OP_SET:
                self.set(key, value)
                return wire.encode_response(wire.STATUS_OK)
            if opcode == wire.OP_GET:
                found = self.get(key)
                if found is None:
                    return wire.encode_response(wire.STATUS_NOT_FOUND)
                return wire.encode_response(wire.STATUS_OK, found)
            return wire.encode_response(
                wire.STATUS_OK, wire.encode_counter(self.add(key, wire.decode_counter(value)))
            )
        except ProtocolError as e:
            logger.warning("Rejected request: %s", e.message)
            return wire.encode_response(wire.STATUS_ERROR, e.message.encode("utf8"))


class _KvRequestHandler(socketserver.BaseRequestHandler):
    server: "_KvTcpServer"

    def handle(self) -> None:
        sock: socket.socket = self.request
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        while True:
            try:
                payload = wire.recv_frame(sock)
            except (ConnectionError, OSError):
                return
            except ProtocolError as e:
                logger.warning("Dropping connection from %s: %s", self.client_address, e.message)
                return
            try:
                wire.send_frame(sock, self.server.table.handle(payload))
            except OSError:
                return


class _KvTcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True
    # one connection per rank, all opened at rendezvous
    request_queue_size = 64

    def __init__(self, address: Tuple[str, int], table: KvTable) -> None:
        self.table = table
        super().__init__(address, _KvRequestHandler)


class KvServer:
    """Standalone store; ``serve_forever`` for the ``kv-server`` command,
    ``start``/``stop`` to run it on a background thread."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, keep: int = GC_KEEP) -> None:
        self.table = KvTable(keep)
        self._server = _KvTcpServer((host, port), self.table)
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def serve_forever(self) -> None:
        logger.info("KV store listening on %s", self.address)
        try:
            self._server.serve_forever(poll_interval=0.1)
        finally:
            self._server.server_close()

    def start(self) -> "KvServer":
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.1}, daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()
            self._thread = None

    def __enter__(self) -> "KvServer":
        return self.start()

    def __exit__(self, *exc: object) -> None:
        self.stop()


class KvClient:
    """Blocking client holding one connection.

    Connection establishment is retried; a failure after a request has been
    sent is reported as :class:`TransportError` without resending, since ADD
    is not idempotent.
    """

    def __init__(
        self,
        address: str,
        timeout: float = 30.0,
        connect_retries: int = 50,
        retry_interval: float = 0.1,
    ) -> None:
        self.address = address
        self.timeout = timeout
        self.connect_retries = connect_retries
        self.retry_interval = retry_interval
        self.calls = 0
        self._sock: Optional[socket.socket] = None
        self._lock = threading.Lock()

    def _connect(self) -> socket.socket:
        host, port = wire.parse_address(self.address)
        last: Optional[OSError] = None
        for _ in range(max(1, self.connect_retries)):
            try:
                sock = socket.create_connection((host, port), timeout=self.timeout)
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                return sock
            except OSError as e:
                last = e
                time.sleep(self.retry_interval)
        raise TransportError(self.address, f"cannot connect: {last}")

    def _request(self, payload: bytes) -> Tuple[int, bytes]:
        with self._lock:
            if self._sock is None:
                self._sock = self._connect()
            self.calls += 1
            try:
                wire.send_frame(self._sock, payload)
                status, value = wire.decode_response(wire.recv_frame(self._sock))
            except (OSError, ConnectionError) as e:
                self._close()
                raise TransportError(self.address, str(e)) from e
        if status == wire.STATUS_ERROR:
            raise ProtocolError(value.decode("utf8", errors="replace"))
        return status, value

    def set(self, key: str, value: bytes) -> None:
        self._request(wire.encode_request(wire.OP_SET, key, value))

    def get(self, key: str) -> Optional[bytes]:
        """Value of ``key``; None when absent (distinct from ``b""``)."""

        status, value = self._request(wire.encode_request(wire.OP_GET, key))
        return None if status == wire.STATUS_NOT_FOUND else value

    def add(self, key: str, delta: int) -> int:
        _, value = self._request(
            wire.encode_request(wire.OP_ADD, key, wire.encode_counter(delta))
        )
        return wire.decode_counter(value)

    def get_counter(self, key: str) -> int:
        value = self.get(key)
        return 0 if value is None else wire.decode_counter(value)

    def _close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def close(self) -> None:
        with self._lock:
            self._close()

    def __enter__(self) -> "KvClient":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def kv_add(store: KvClient, key: str, delta: int) -> int:
    """Atomic add; creates ``key`` at 0 when absent and returns the new value."""

    return store.add(key, delta)
