"""Feed-forward policy/value network over a flat parameter vector.

Layer weights are stored ``(out, in)`` and applied as ``x @ W.T + b``. The trunk
is a stack of tanh layers shared by a categorical action head and a scalar value
head::

    obs -> [trunk.0 -> tanh -> trunk.1 -> tanh ...] -> action_head -> logits
                                                   \\-> value_head  -> value
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigurationError, LayoutMismatchError
from ..utils import array_hash, u64_digest

ACTIVATIONS = ("tanh",)
TRUNK = "trunk"
ACTION_HEAD = "action_head"
VALUE_HEAD = "value_head"

HIDDEN_GAIN = float(np.sqrt(2.0))
ACTION_GAIN = 0.01
VALUE_GAIN = 1.0


@dataclass(frozen=True)
class LayerSlot:
    """Location of one tensor inside the flat vector."""

    name: str
    shape: Tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def stop(self) -> int:
        return self.offset + self.size

    @property
    def layer(self) -> str:
        return self.name.rsplit(".", 1)[0]


@dataclass(frozen=True)
class Layout:
    slots: Tuple[LayerSlot, ...]

    @cached_property
    def size(self) -> int:
        return self.slots[-1].stop if self.slots else 0

    @cached_property
    def by_name(self) -> Mapping[str, LayerSlot]:
        return {slot.name: slot for slot in self.slots}

    @cached_property
    def hash(self) -> int:
        """64-bit digest of the ordered (name, shape) records."""

        canonical = ";".join(
            f"{slot.name}:{'x'.join(map(str, slot.shape))}" for slot in self.slots
        )
        return u64_digest(canonical)

    def select(self, prefixes: Sequence[str]) -> Iterator[LayerSlot]:
        for slot in self.slots:
            if any(slot.name == p or slot.name.startswith(p + ".") for p in prefixes):
                yield slot

    def mask(self, prefixes: Sequence[str]) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        for slot in self.select(prefixes):
            mask[slot.offset : slot.stop] = True
        return mask


@dataclass(frozen=True)
class NetSpec:
    obs_dim: int
    hidden_dims: Tuple[int, ...] = (64, 64)
    num_actions: int = 4
    activation: str = "tanh"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if self.obs_dim < 1:
            raise ConfigurationError("obs_dim", "must be >= 1")
        if any(dim < 1 for dim in self.hidden_dims):
            raise ConfigurationError("hidden_dims", "all dims must be >= 1")
        if self.num_actions < 2:
            raise ConfigurationError("num_actions", "must be >= 2")
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError("activation", f"must be one of {ACTIVATIONS}")

    @property
    def trunk_layers(self) -> Sequence[str]:
        return [f"{TRUNK}.{i}" for i in range(len(self.hidden_dims))]

    @property
    def feature_dim(self) -> int:
        return self.hidden_dims[-1] if self.hidden_dims else self.obs_dim

    @cached_property
    def layout(self) -> Layout:
        slots: List[LayerSlot] = []
        offset = 0

        def add(name: str, shape: Tuple[int, ...]) -> None:
            nonlocal offset
            slot = LayerSlot(name, shape, offset)
            slots.append(slot)
            offset = slot.stop

        in_dim = self.obs_dim
        for layer, out_dim in zip(self.trunk_layers, self.hidden_dims):
            add(f"{layer}.weight", (out_dim, in_dim))
            add(f"{layer}.bias", (out_dim,))
            in_dim = out_dim
        add(f"{ACTION_HEAD}.weight", (self.num_actions, in_dim))
        add(f"{ACTION_HEAD}.bias", (self.num_actions,))
        add(f"{VALUE_HEAD}.weight", (1, in_dim))
        add(f"{VALUE_HEAD}.bias", (1,))
        return Layout(tuple(slots))

    def to_dict(self) -> Mapping[str, object]:
        return {
            "obs_dim": self.obs_dim,
            "hidden_dims": list(self.hidden_dims),
            "num_actions": self.num_actions,
            "activation": self.activation,
        }


@dataclass
class ParamVector:
    """All network parameters as one flat float64 vector."""

    values: np.ndarray
    layout: Layout

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape[0] != self.layout.size:
            raise ConfigurationError(
                "params",
                f"expected {self.layout.size} values, got {self.values.shape}",
            )

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def view(self, name: str) -> np.ndarray:
        """Writable view of one tensor."""

        slot = self.layout.by_name[name]
        return self.values[slot.offset : slot.stop].reshape(slot.shape)

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.layout)

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return ParamVector(values, self.layout)

    @property
    def hash(self) -> str:
        return array_hash(self.values)

    def check_layout(self, spec: NetSpec) -> None:
        if self.layout.hash != spec.layout.hash:
            raise LayoutMismatchError(spec.layout.hash, self.layout.hash)


@dataclass(frozen=True)
class PolicyOutput:
    action_logits: np.ndarray
    value: float


@dataclass
class ForwardCache:
    """Activations kept for the backward pass (batched)."""

    inputs: np.ndarray
    hidden: List[np.ndarray] = field(default_factory=list)
    logits: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    @property
    def features(self) -> np.ndarray:
        return self.hidden[-1] if self.hidden else self.inputs


def orthogonal(
    shape: Tuple[int, int], gain: float, rng: np.random.Generator
) -> np.ndarray:
    """Orthogonal matrix scaled by ``gain``; rows or columns (whichever are
    fewer) are orthonormal before scaling."""

    rows, cols = shape
    flat = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return gain * q.reshape(shape)


def _init_layer(
    params: ParamVector, layer: str, gain: float, rng: np.random.Generator
) -> None:
    weight = params.view(f"{layer}.weight")
    weight[...] = orthogonal(weight.shape, gain, rng)  # type: ignore[arg-type]
    params.view(f"{layer}.bias")[...] = 0.0


def init_params(spec: NetSpec, rng: np.random.Generator) -> ParamVector:
    """Orthogonal weights (gain sqrt(2) hidden, 0.01 action, 1.0 value), zero biases."""

    params = ParamVector(np.zeros(spec.layout.size), spec.layout)
    for layer in spec.trunk_layers:
        _init_layer(params, layer, HIDDEN_GAIN, rng)
    _init_layer(params, ACTION_HEAD, ACTION_GAIN, rng)
    _init_layer(params, VALUE_HEAD, VALUE_GAIN, rng)
    return params


def reinit_critic(
    spec: NetSpec, params: ParamVector, rng: np.random.Generator
) -> ParamVector:
    """Resample the value head only; every other entry stays bit-identical."""

    params.check_layout(spec)
    out = params.copy()
    _init_layer(out, VALUE_HEAD, VALUE_GAIN, rng)
    return out


def reinit_heads(
    spec: NetSpec, params: ParamVector, rng: np.random.Generator
) -> ParamVector:
    params.check_layout(spec)
    out = params.copy()
    _init_layer(out, ACTION_HEAD, ACTION_GAIN, rng)
    _init_layer(out, VALUE_HEAD, VALUE_GAIN, rng)
    return out


def _check_obs(spec: NetSpec, obs: np.ndarray) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim == 1:
        obs = obs[None, :]
    if obs.ndim != 2 or obs.shape[1] != spec.obs_dim:
        raise ConfigurationError(
            "obs", f"expected obs_dim {spec.obs_dim}, got shape {obs.shape}"
        )
    return obs


def forward_batch(
    spec: NetSpec, params: ParamVector, obs: np.ndarray
) -> ForwardCache:
    """Batched forward pass; returns logits ``(B, A)`` and values ``(B,)``."""

    params.check_layout(spec)
    x = _check_obs(spec, obs)
    cache = ForwardCache(inputs=x)
    h = x
    for layer in spec.trunk_layers:
        h = np.tanh(h @ params.view(f"{layer}.weight").T + params.view(f"{layer}.bias"))
        cache.hidden.append(h)
    cache.logits = h @ params.view(f"{ACTION_HEAD}.weight").T + params.view(
        f"{ACTION_HEAD}.bias"
    )
    cache.values = (
        h @ params.view(f"{VALUE_HEAD}.weight").T + params.view(f"{VALUE_HEAD}.bias")
    )[:, 0]
    return cache


def forward(spec: NetSpec, params: ParamVector, obs: np.ndarray) -> PolicyOutput:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim != 1:
        raise ConfigurationError("obs", f"expected a single observation, got {obs.shape}")
    cache = forward_batch(spec, params, obs)
    assert cache.logits is not None and cache.values is not None
    return PolicyOutput(action_logits=cache.logits[0], value=float(cache.values[0]))
