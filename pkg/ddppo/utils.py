"""Utilities"""
import hashlib
import logging
import time
from contextlib import contextmanager
from logging import Logger, LoggerAdapter
from typing import Any, Iterator, MutableMapping, Optional, Union

import numpy as np
from tqdm import tqdm

ddppo_logger = Union[Logger, LoggerAdapter]


class TqdmLoggingHandler(logging.Handler):
    """Emit records through :func:`tqdm.write` so progress bars stay intact."""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            msg = self.format(record)
            tqdm.write(msg)
            self.flush()
        except Exception:  # pylint: disable=broad-except
            self.handleError(record)


class DetailFilter(logging.Filter):
    """Provide a default ``detail`` field for the detailed formatter."""

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "detail"):
            setattr(record, "detail", "-")
        return True


def get_logger(name: str, detail: Optional[str] = None) -> ddppo_logger:
    logger = logging.getLogger(f"ddppo.{name}" if not name.startswith("ddppo") else name)
    if detail is None:
        return logger

    return LoggerAdapter(logger, {"detail": detail})


def rank_detail(rank: int, world_size: int) -> str:
    return f"rank {rank}/{world_size}"


def array_hash(values: np.ndarray) -> str:
    """Hex digest of the raw little-endian bytes of ``values``."""

    data = np.ascontiguousarray(values, dtype=values.dtype.newbyteorder("<"))
    return hashlib.blake2b(data.tobytes(), digest_size=16).hexdigest()


def u64_digest(text: str) -> int:
    return int.from_bytes(
        hashlib.blake2b(text.encode("utf8"), digest_size=8).digest(), "little"
    )


class Stopwatch:
    """Accumulates wall-clock durations per named phase."""

    def __init__(self) -> None:
        self.durations: MutableMapping[str, float] = {}

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - start
            self.durations[name] = self.durations.get(name, 0.0) + elapsed

    def get(self, name: str) -> float:
        return self.durations.get(name, 0.0)

    def reset(self) -> None:
        self.durations.clear()


def none_if_nan(value: Any) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    if np.isnan(value):
        return None
    return value
