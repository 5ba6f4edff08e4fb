"""Per-step simulation cost.

``homogeneous`` gives every env the same duration ``mu``; ``heterogeneous`` draws
one duration per env, log-uniform over ``[lo, hi]``, when the env is created.
"""
import math
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..exceptions import ConfigurationError

if TYPE_CHECKING:
    from ..config_utils import DelayConfig

NONE = "none"
HOMOGENEOUS = "homogeneous"
HETEROGENEOUS = "heterogeneous"

# below this, sleep() overshoots by more than the remaining time
_SPIN_THRESHOLD = 2e-4


@dataclass(frozen=True)
class DelayModel:
    kind: str = NONE
    mu: float = 0.0
    lo: float = 0.001
    hi: float = 0.020

    def __post_init__(self) -> None:
        if self.kind not in (NONE, HOMOGENEOUS, HETEROGENEOUS):
            raise ConfigurationError("delay.kind", f"unknown delay kind '{self.kind}'")
        if self.kind == HETEROGENEOUS and not 0 < self.lo <= self.hi:
            raise ConfigurationError("delay.lo", "must satisfy 0 < lo <= hi")

    @classmethod
    def from_config(cls, config: "DelayConfig") -> "DelayModel":
        return cls(kind=config.kind, mu=config.mu, lo=config.lo, hi=config.hi)

    def sample(self, rng: np.random.Generator) -> float:
        """Fixed per-env step duration in seconds."""

        if self.kind == HOMOGENEOUS:
            return self.mu
        if self.kind == HETEROGENEOUS:
            return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))
        return 0.0


def wait(duration: float) -> None:
    """Sleep for ``duration`` seconds, spinning for the last fraction."""

    if duration <= 0:
        return
    deadline = time.perf_counter() + duration
    if duration > _SPIN_THRESHOLD:
        time.sleep(duration - _SPIN_THRESHOLD)
    while time.perf_counter() < deadline:
        pass
