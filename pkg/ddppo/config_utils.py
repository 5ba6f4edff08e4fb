"""Config related.

A run is described by a single :class:`TrainConfig`. Values come from (lowest to
highest precedence) the dataclass defaults, a UTF-8 key-value file (JSON or
YAML, parsed with PyYAML) and ``--set key=value`` overrides from the CLI.
Nested fields are addressed with dots, e.g. ``delay.kind=heterogeneous``.
"""
import copy
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping, MutableMapping, Optional, Sequence, Tuple

import yaml

from .exceptions import ConfigurationError

PREFIX = "DDPPO_"

TASKS = ("pointnav", "flee", "explore")
TRANSFER_MODES = ("scratch", "frozen_encoder", "finetune")
SENSORS = ("patch", "blind")
DELAY_KINDS = ("none", "homogeneous", "heterogeneous")


def variable_name(name: str) -> str:
    """Environment variable name for a config variable."""

    return PREFIX + name


@dataclass(frozen=True)
class DelayConfig:
    """Per-step simulation cost (seconds)."""

    kind: str = "none"
    mu: float = 0.002
    lo: float = 0.001
    hi: float = 0.020

    def validate(self) -> None:
        if self.kind not in DELAY_KINDS:
            raise ConfigurationError("delay.kind", f"must be one of {DELAY_KINDS}")
        if self.mu < 0:
            raise ConfigurationError("delay.mu", "must be >= 0")
        if not 0 < self.lo <= self.hi:
            raise ConfigurationError("delay.lo", "must satisfy 0 < lo <= hi")


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True)
class TrainConfig:
    # PPO
    gamma: float = 0.99
    tau_gae: float = 0.95
    clip_eps: float = 0.2
    rollout_steps: int = 128
    envs_per_worker: int = 4
    epochs: int = 2
    minibatches: int = 2
    lr: float = 2.5e-4
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    max_grad_norm: float = 0.5

    # DD-PPO
    p_preempt: float = 0.6
    total_steps: int = 2_000_000
    seed: int = 1

    # task and transfer
    task: str = "pointnav"
    transfer_mode: str = "scratch"
    pretrained: Optional[str] = None

    # network / sensors
    hidden_dims: Tuple[int, ...] = (64, 64)
    sensor: str = "patch"
    patch_size: int = 5

    # environments
    map_size: int = 16
    obstacle_density: float = 0.2
    num_train_maps: int = 32
    num_eval_maps: int = 8
    cell_size: float = 0.25
    max_episode_steps: int = 200
    min_geo: float = 1.0
    max_geo: float = 8.0
    success_radius: int = 0
    delay: DelayConfig = field(default_factory=DelayConfig)
    # directory of saved map files; replaces the generated maps of both splits
    maps_dir: Optional[str] = None

    # bookkeeping
    checkpoint_interval: int = 50
    output_dir: str = "runs/default"
    rendezvous_timeout: float = 60.0
    barrier_timeout: float = 300.0
    debug_sync_check: bool = False

    def __post_init__(self) -> None:
        # YAML/JSON lists arrive as lists
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if isinstance(self.delay, Mapping):
            object.__setattr__(self, "delay", _build(DelayConfig, self.delay, "delay."))

    @property
    def min_rollout_steps(self) -> int:
        return math.ceil(self.rollout_steps / 4)

    @property
    def steps_per_iteration(self) -> int:
        return self.rollout_steps * self.envs_per_worker

    def validate(self) -> "TrainConfig":
        # pylint: disable=too-many-branches
        _in_range("gamma", self.gamma, 0.0, 1.0)
        _in_range("tau_gae", self.tau_gae, 0.0, 1.0)
        if self.clip_eps <= 0:
            raise ConfigurationError("clip_eps", "must be > 0")
        for name in ("rollout_steps", "envs_per_worker", "epochs", "minibatches"):
            if getattr(self, name) < 1:
                raise ConfigurationError(name, "must be >= 1")
        if self.envs_per_worker % self.minibatches:
            raise ConfigurationError(
                "minibatches", "must divide envs_per_worker (minibatches split envs)"
            )
        if self.lr <= 0:
            raise ConfigurationError("lr", "must be > 0")
        if self.value_coef < 0 or self.entropy_coef < 0:
            raise ConfigurationError("value_coef/entropy_coef", "must be >= 0")
        if not 0 < self.p_preempt <= 1:
            raise ConfigurationError("p_preempt", "must be in (0, 1]")
        if self.total_steps < 0:
            raise ConfigurationError("total_steps", "must be >= 0")
        if self.task not in TASKS:
            raise ConfigurationError("task", f"must be one of {TASKS}")
        if self.transfer_mode not in TRANSFER_MODES:
            raise ConfigurationError("transfer_mode", f"must be one of {TRANSFER_MODES}")
        if self.transfer_mode != "scratch" and not self.pretrained:
            raise ConfigurationError("pretrained", "required unless transfer_mode=scratch")
        if self.sensor not in SENSORS:
            raise ConfigurationError("sensor", f"must be one of {SENSORS}")
        if self.patch_size < 1 or self.patch_size % 2 == 0:
            raise ConfigurationError("patch_size", "must be odd and >= 1")
        if any(dim < 1 for dim in self.hidden_dims):
            raise ConfigurationError("hidden_dims", "all dims must be >= 1")
        if self.map_size < 2:
            raise ConfigurationError("map_size", "must be >= 2")
        _in_range("obstacle_density", self.obstacle_density, 0.0, 0.9)
        if self.num_train_maps < 1 or self.num_eval_maps < 1:
            raise ConfigurationError("num_train_maps/num_eval_maps", "must be >= 1")
        if self.cell_size <= 0:
            raise ConfigurationError("cell_size", "must be > 0")
        if self.max_episode_steps < 1:
            raise ConfigurationError("max_episode_steps", "must be >= 1")
        if not 0 < self.min_geo <= self.max_geo:
            raise ConfigurationError("min_geo", "must satisfy 0 < min_geo <= max_geo")
        if self.checkpoint_interval < 1:
            raise ConfigurationError("checkpoint_interval", "must be >= 1")
        self.delay.validate()
        return self

    def to_dict(self) -> MutableMapping[str, Any]:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    def override(self, **kwargs: Any) -> "TrainConfig":
        return replace(self, **kwargs).validate()


def _in_range(name: str, value: float, lo: float, hi: float) -> None:
    if not lo <= value <= hi:
        raise ConfigurationError(name, f"must be in [{lo}, {hi}]")


def _build(cls: Any, values: Mapping[str, Any], prefix: str = "") -> Any:
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(prefix + sorted(unknown)[0], "unknown config variable")
    try:
        return cls(**values)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(prefix.rstrip(".") or cls.__name__, str(e)) from e


def parse_override(item: str) -> Tuple[Sequence[str], Any]:
    """Parse ``a.b=value``; the value is read as a YAML scalar."""

    if "=" not in item:
        raise ConfigurationError(item, "override must have the form key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigurationError(item, "empty key")
    return key.split("."), yaml.safe_load(raw)


def apply_overrides(
    values: MutableMapping[str, Any], overrides: Sequence[str]
) -> MutableMapping[str, Any]:
    for item in overrides:
        path, value = parse_override(item)
        target = values
        for part in path[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, MutableMapping):
                raise ConfigurationError(item, f"'{part}' is not a nested variable")
        target[path[-1]] = value
    return values


def read_config_file(path: str) -> MutableMapping[str, Any]:
    with open(path, encoding="utf8") as file:
        values = yaml.safe_load(file.read()) or {}
    if not isinstance(values, MutableMapping):
        raise ConfigurationError(path, "config file must contain a key-value mapping")
    return values


def load_config(
    path: Optional[str] = None, overrides: Sequence[str] = ()
) -> TrainConfig:
    """Load and validate a :class:`TrainConfig`.

    Args:
        path: config file; falls back to :envvar:`DDPPO_CONF`, then to defaults.
        overrides: ``key=value`` items that win over file values.

    Returns:
        validated config

    Raises:
        ConfigurationError: unknown variable or value out of range.
    """

    path = path or os.environ.get(variable_name("CONF"))
    values: MutableMapping[str, Any] = read_config_file(path) if path else {}
    return build_config(values, overrides)


def build_config(
    values: Mapping[str, Any], overrides: Sequence[str] = ()
) -> TrainConfig:
    """Validated config from a mapping (e.g. a checkpoint trailer) plus overrides."""

    values = apply_overrides(copy.deepcopy(dict(values)), overrides)
    config: TrainConfig = _build(TrainConfig, values)
    return config.validate()


def dump_config(config: TrainConfig, path: str) -> None:
    with open(path, "w", encoding="utf8") as file:
        yaml.safe_dump(config.to_dict(), file, sort_keys=False)
