from typing import Optional, Sequence, Tuple


class DdppoError(Exception):
    """Generic engine exception"""

    def __str__(self) -> str:
        return self.message

    @property
    def message(self) -> str:
        raise NotImplementedError

    @property
    def msg(self) -> str:
        return self.message


class ConfigurationError(DdppoError):
    """Invalid configuration or dimension mismatch"""

    def __init__(self, field: str, reason: str) -> None:
        super().__init__()
        self.field = field
        self.reason = reason

    @property
    def message(self) -> str:
        return f"Invalid configuration for '{self.field}': {self.reason}"

    @property
    def msg(self) -> str:
        return "Invalid configuration"


class NumericalError(DdppoError):
    """Non-finite value in an intermediate tensor"""

    def __init__(self, tensor_id: str) -> None:
        super().__init__()
        self.tensor_id = tensor_id

    @property
    def message(self) -> str:
        return f"Non-finite values in tensor: {self.tensor_id}"

    @property
    def msg(self) -> str:
        return "Numerical failure"


class LayoutMismatchError(DdppoError):
    """Parameter layouts of two parties disagree"""

    def __init__(self, expected: int, actual: int) -> None:
        super().__init__()
        self.expected = expected
        self.actual = actual

    @property
    def message(self) -> str:
        return (
            f"Parameter layout mismatch: expected {self.expected:#018x}, "
            f"got {self.actual:#018x}"
        )

    @property
    def msg(self) -> str:
        return "Parameter layout mismatch"


class CheckpointFormatError(DdppoError):
    def __init__(self, path: str, reason: str) -> None:
        super().__init__()
        self.path = path
        self.reason = reason

    @property
    def message(self) -> str:
        return f"Invalid checkpoint '{self.path}': {self.reason}"


class InvalidCellError(DdppoError):
    def __init__(self, cell: Tuple[int, int]) -> None:
        super().__init__()
        self.cell = cell

    @property
    def message(self) -> str:
        return f"Cell is occupied or outside the grid: {self.cell}"


class MapFormatError(DdppoError):
    def __init__(self, path: str, reason: str) -> None:
        super().__init__()
        self.path = path
        self.reason = reason

    @property
    def message(self) -> str:
        return f"Invalid map file '{self.path}': {self.reason}"


class EnvProtocolError(DdppoError):
    """Environment used out of order (e.g. step after done)"""

    def __init__(self, reason: str) -> None:
        super().__init__()
        self.reason = reason

    @property
    def message(self) -> str:
        return f"Environment protocol violated: {self.reason}"


class EpisodeGenerationError(DdppoError):
    """Generated episode is unusable for the task and must be regenerated"""

    def __init__(self, reason: str) -> None:
        super().__init__()
        self.reason = reason

    @property
    def message(self) -> str:
        return f"Episode generation failed: {self.reason}"


class InfeasibleEpisodeError(EpisodeGenerationError):
    def __init__(self, attempts: int, min_geo: float, max_geo: float) -> None:
        super().__init__(
            f"no start/goal pair with geodesic distance in "
            f"[{min_geo}, {max_geo}] m after {attempts} attempts"
        )
        self.attempts = attempts


class InvalidEpisodeError(DdppoError):
    def __init__(self, shortest_path_len: float) -> None:
        super().__init__()
        self.shortest_path_len = shortest_path_len

    @property
    def message(self) -> str:
        return f"Shortest path length must be positive: {self.shortest_path_len}"


class TransportError(DdppoError):
    """Connection level failure - the operation may be retried"""

    def __init__(self, address: str, reason: str) -> None:
        super().__init__()
        self.address = address
        self.reason = reason

    @property
    def message(self) -> str:
        return f"Transport failure ({self.address}): {self.reason}"


class ProtocolError(DdppoError):
    """Peers disagree on the collective protocol (fatal)"""

    def __init__(self, reason: str) -> None:
        super().__init__()
        self.reason = reason

    @property
    def message(self) -> str:
        return f"Protocol error: {self.reason}"


class PeerDisconnectedError(DdppoError):
    def __init__(self, rank: int, reason: str = "") -> None:
        super().__init__()
        self.rank = rank
        self.reason = reason

    @property
    def message(self) -> str:
        suffix = f": {self.reason}" if self.reason else ""
        return f"Peer rank {self.rank} disconnected{suffix}"


class DuplicateRankError(DdppoError):
    def __init__(self, rank: int) -> None:
        super().__init__()
        self.rank = rank

    @property
    def message(self) -> str:
        return f"Rank {self.rank} claimed by more than one worker"


class RendezvousTimeoutError(DdppoError):
    def __init__(self, missing_ranks: Sequence[int], timeout: float) -> None:
        super().__init__()
        self.missing_ranks = tuple(missing_ranks)
        self.timeout = timeout

    @property
    def message(self) -> str:
        missing = ",".join(str(rank) for rank in self.missing_ranks)
        return f"Rendezvous timed out after {self.timeout}s, missing ranks: {missing}"


class BarrierTimeoutError(DdppoError):
    def __init__(self, name: str, arrived: int, expected: int) -> None:
        super().__init__()
        self.name = name
        self.arrived = arrived
        self.expected = expected

    @property
    def message(self) -> str:
        return (
            f"Barrier '{self.name}' timed out: "
            f"{self.arrived} of {self.expected} workers arrived"
        )


class LaunchError(DdppoError):
    def __init__(self, reason: str, rank: Optional[int] = None, code: int = 1) -> None:
        super().__init__()
        self.reason = reason
        self.rank = rank
        self.code = code

    @property
    def message(self) -> str:
        if self.rank is None:
            return f"Launch failed: {self.reason}"
        return f"Worker rank {self.rank} failed (exit {self.code}): {self.reason}"
