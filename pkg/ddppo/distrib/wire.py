"""Message framing shared by the KV store and the ring links.

Every message is ``[u32 LE payload length][payload]``.

KV request payload:  ``[u8 opcode][u16 LE key length][key bytes][value bytes]``
KV response payload: ``[u8 status][value bytes]``
Ring payload:        ``[u32 LE chunk index][raw f64 LE values]``
"""
import socket
import struct
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ProtocolError

OP_SET = 1
OP_GET = 2
OP_ADD = 3
OPCODES = (OP_SET, OP_GET, OP_ADD)

STATUS_OK = 0
STATUS_NOT_FOUND = 1
STATUS_ERROR = 2

# ring frame carrying the vector length instead of a chunk
HEADER_INDEX = 0xFFFFFFFF

MAX_FRAME = 1 << 31

_LEN = struct.Struct("<I")
_KEY_LEN = struct.Struct("<H")
_INDEX = struct.Struct("<I")
_COUNTER = struct.Struct("<q")
_U64 = struct.Struct("<Q")

F64_LE = np.dtype("<f8")


def recv_exact(sock: socket.socket, n: int) -> bytes:
    """Read exactly ``n`` bytes; raises ``ConnectionError`` on EOF."""

    data = bytearray()
    while len(data) < n:
        chunk = sock.recv(min(n - len(data), 1 << 20))
        if not chunk:
            raise ConnectionError("socket closed")
        data.extend(chunk)
    return bytes(data)


def send_frame(sock: socket.socket, payload: bytes) -> None:
    sock.sendall(_LEN.pack(len(payload)) + payload)


def recv_frame(sock: socket.socket) -> bytes:
    (length,) = _LEN.unpack(recv_exact(sock, _LEN.size))
    if length > MAX_FRAME:
        raise ProtocolError(f"frame of {length} bytes exceeds limit")
    return recv_exact(sock, length) if length else b""


def encode_request(opcode: int, key: str, value: bytes = b"") -> bytes:
    raw_key = key.encode("utf8")
    if len(raw_key) > 0xFFFF:
        raise ProtocolError(f"key too long: {len(raw_key)} bytes")
    return bytes([opcode]) + _KEY_LEN.pack(len(raw_key)) + raw_key + value


def decode_request(payload: bytes) -> Tuple[int, str, bytes]:
    if len(payload) < 1 + _KEY_LEN.size:
        raise ProtocolError("truncated request")
    opcode = payload[0]
    if opcode not in OPCODES:
        raise ProtocolError(f"unknown opcode {opcode}")
    (key_len,) = _KEY_LEN.unpack_from(payload, 1)
    start = 1 + _KEY_LEN.size
    if len(payload) < start + key_len:
        raise ProtocolError("truncated key")
    key = payload[start : start + key_len].decode("utf8")
    return opcode, key, payload[start + key_len :]


def encode_response(status: int, value: bytes = b"") -> bytes:
    return bytes([status]) + value


def decode_response(payload: bytes) -> Tuple[int, bytes]:
    if not payload:
        raise ProtocolError("empty response")
    return payload[0], payload[1:]


def encode_counter(value: int) -> bytes:
    return _COUNTER.pack(value)


def decode_counter(value: bytes) -> int:
    if len(value) != _COUNTER.size:
        raise ProtocolError(f"counter must be {_COUNTER.size} bytes, got {len(value)}")
    return int(_COUNTER.unpack(value)[0])


def encode_chunk(index: int, values: np.ndarray) -> bytes:
    return _INDEX.pack(index) + np.ascontiguousarray(values, dtype=F64_LE).tobytes()


def decode_chunk(payload: bytes) -> Tuple[int, np.ndarray]:
    if len(payload) < _INDEX.size or (len(payload) - _INDEX.size) % F64_LE.itemsize:
        raise ProtocolError(f"malformed ring frame of {len(payload)} bytes")
    (index,) = _INDEX.unpack_from(payload)
    values = np.frombuffer(payload, dtype=F64_LE, offset=_INDEX.size)
    return index, values.astype(np.float64)


def encode_length_header(length: int) -> bytes:
    return _INDEX.pack(HEADER_INDEX) + _U64.pack(length)


def decode_length_header(payload: bytes) -> Optional[int]:
    """Vector length announced by a header frame, None for any other frame."""

    if len(payload) != _INDEX.size + _U64.size:
        return None
    (index,) = _INDEX.unpack_from(payload)
    if index != HEADER_INDEX:
        return None
    return int(_U64.unpack_from(payload, _INDEX.size)[0])


def parse_address(address: str) -> Tuple[str, int]:
    """``host:port`` -> ``(host, port)``."""

    host, sep, port = address.rpartition(":")
    if not sep or not host:
        raise ValueError(f"Expected host:port, got '{address}'")
    return host, int(port)
