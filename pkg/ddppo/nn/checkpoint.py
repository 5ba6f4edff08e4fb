"""Checkpoint file format.

    offset  size  field
    0       4     magic b"DDPP"
    4       2     format version, u16 LE
    6       8     layout hash, u64 LE
    14      8     parameter count, u64 LE
    22      8*n   parameters, float64 LE
    ...           UTF-8 JSON trailer: {"net_spec", "step", "rng_state", ...}
"""
import struct
from dataclasses import dataclass, field
from typing import Any, Mapping, MutableMapping, Optional

import numpy as np

from ..exceptions import CheckpointFormatError, LayoutMismatchError
from ..file_utils import atomic_write, dumps, loads
from .net import NetSpec, ParamVector

MAGIC = b"DDPP"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHQQ")
_LE_F64 = np.dtype("<f8")

# keys of numpy bit generator states that may exceed 64 bits
_BIG_INT_KEYS = ("state", "inc")


@dataclass
class Checkpoint:
    spec: NetSpec
    params: ParamVector
    step: int = 0
    rng_state: Optional[Mapping[str, Any]] = None
    extra: MutableMapping[str, Any] = field(default_factory=dict)


def encode_rng_state(rng: np.random.Generator) -> Mapping[str, Any]:
    """JSON-safe copy of a generator state (128-bit integers become strings)."""

    state: MutableMapping[str, Any] = dict(rng.bit_generator.state)
    inner = dict(state["state"])
    for key in _BIG_INT_KEYS:
        if key in inner:
            inner[key] = str(inner[key])
    state["state"] = inner
    return state


def decode_rng_state(state: Mapping[str, Any]) -> np.random.Generator:
    state = dict(state)
    inner = dict(state["state"])
    for key in _BIG_INT_KEYS:
        if key in inner:
            inner[key] = int(inner[key])
    state["state"] = inner
    bit_generator = getattr(np.random, state["bit_generator"])()
    bit_generator.state = state
    return np.random.Generator(bit_generator)


def to_bytes(ckpt: Checkpoint) -> bytes:
    ckpt.params.check_layout(ckpt.spec)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, ckpt.spec.layout.hash, len(ckpt.params))
    body = ckpt.params.values.astype(_LE_F64).tobytes()
    trailer = dumps(
        {
            "net_spec": ckpt.spec.to_dict(),
            "step": ckpt.step,
            "rng_state": ckpt.rng_state,
            **ckpt.extra,
        }
    )
    return header + body + trailer


def from_bytes(
    data: bytes, expected: Optional[NetSpec] = None, path: str = "<memory>"
) -> Checkpoint:
    if len(data) < _HEADER.size:
        raise CheckpointFormatError(path, "truncated header")
    magic, version, layout_hash, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(path, f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(path, f"unsupported format version {version}")
    if expected is not None and layout_hash != expected.layout.hash:
        raise LayoutMismatchError(expected.layout.hash, layout_hash)

    body_end = _HEADER.size + 8 * count
    if len(data) < body_end:
        raise CheckpointFormatError(path, "truncated parameter block")
    values = np.frombuffer(data, dtype=_LE_F64, count=count, offset=_HEADER.size)
    try:
        trailer = loads(data[body_end:])
    except ValueError as e:
        raise CheckpointFormatError(path, f"invalid JSON trailer: {e}") from e

    net = trailer.pop("net_spec")
    spec = NetSpec(
        obs_dim=net["obs_dim"],
        hidden_dims=tuple(net["hidden_dims"]),
        num_actions=net["num_actions"],
        activation=net["activation"],
    )
    if spec.layout.hash != layout_hash:
        raise CheckpointFormatError(path, "net spec in trailer does not match layout hash")
    params = ParamVector(values.astype(np.float64), spec.layout)
    return Checkpoint(
        spec=spec,
        params=params,
        step=int(trailer.pop("step", 0)),
        rng_state=trailer.pop("rng_state", None),
        extra=trailer,
    )


def save_checkpoint(path: str, ckpt: Checkpoint) -> str:
    atomic_write(path, to_bytes(ckpt))
    return path


def load_checkpoint(path: str, expected: Optional[NetSpec] = None) -> Checkpoint:
    """Read a checkpoint; with ``expected`` set, reject other layouts.

    Raises:
        LayoutMismatchError: layout hash differs from ``expected``.
        CheckpointFormatError: file is unreadable or not a checkpoint.
    """

    try:
        with open(path, "rb") as fd:
            data = fd.read()
    except OSError as e:
        raise CheckpointFormatError(path, f"cannot read: {e.strerror}") from e
    return from_bytes(data, expected, path)
