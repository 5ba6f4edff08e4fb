import os
from types import TracebackType
from typing import IO, Any, Iterator, Mapping, Optional, Sequence, Type

import numpy as np
import orjson

_JSON_OPTS = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS


def create_dir(path: str) -> str:
    if path:
        os.makedirs(path, exist_ok=True)
    return path


def _default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"Type is not JSON serializable: {type(obj).__name__}")


def dumps(obj: Any) -> bytes:
    return orjson.dumps(obj, default=_default, option=_JSON_OPTS)


def loads(data: bytes) -> Any:
    return orjson.loads(data)


class JsonlWriter:
    """Append-only JSONL file, one record per line, flushed per record."""

    def __init__(self, path: str, mode: str = "ab") -> None:
        create_dir(os.path.dirname(path))
        self.path = path
        self._fd: IO[bytes] = open(path, mode)  # pylint: disable=consider-using-with

    def write(self, record: Mapping[str, Any]) -> None:
        self._fd.write(dumps(record) + b"\n")
        self._fd.flush()

    def write_all(self, records: Sequence[Mapping[str, Any]]) -> None:
        for record in records:
            self.write(record)

    def close(self) -> None:
        if not self._fd.closed:
            self._fd.close()

    def __enter__(self) -> "JsonlWriter":
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        tb: Optional[TracebackType],
    ) -> None:
        self.close()


def read_jsonl(path: str) -> Iterator[Any]:
    with open(path, "rb") as fd:
        for line in fd:
            line = line.strip()
            if line:
                yield loads(line)


def atomic_write(path: str, data: bytes) -> None:
    """Write to ``path.tmp`` and rename; readers never see partial files."""

    create_dir(os.path.dirname(path))
    tmp = path + ".tmp"
    with open(tmp, "wb") as fd:
        fd.write(data)
        fd.flush()
        os.fsync(fd.fileno())
    os.replace(tmp, path)
