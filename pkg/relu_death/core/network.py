from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import torch

from relu_death.errors import RejectedInputError

DTYPE = torch.float64


class BiasMode(str, Enum):
    ZERO = "zero"
    FREE = "free"


class DeathEvent(str, Enum):
    """Layer transition events, conditioned on some data alive entering the layer."""

    E1 = "E1"  # all remaining data lives
    E2 = "E2"  # some of it dies
    E3 = "E3"  # all of it dies


@dataclass(frozen=True)
class LayerParams:
    """
    Parameters of one width-n fully connected ReLU layer, F(x) = max(A x + b, 0).

    Args:
        weights (`torch.Tensor` of shape `(n, n)`):
            The multiplicative parameters A.
        bias (`torch.Tensor` of shape `(n,)`):
            The additive parameters b.
    """

    weights: torch.Tensor
    bias: torch.Tensor

    def __post_init__(self):
        if self.weights.ndim != 2 or self.weights.shape[0] != self.weights.shape[1]:
            raise RejectedInputError(f"weights must be square, got shape {tuple(self.weights.shape)}")
        if self.bias.shape != (self.weights.shape[0],):
            raise RejectedInputError(
                f"bias must have length {self.weights.shape[0]}, got shape {tuple(self.bias.shape)}"
            )

    @property
    def width(self) -> int:
        return self.weights.shape[0]

    def pre_activation(self, x: torch.Tensor) -> torch.Tensor:
        # x: [M, n], rows are data points
        return x @ self.weights.T + self.bias

    def negated(self) -> "LayerParams":
        return LayerParams(-self.weights, -self.bias)

    def with_bias(self, bias: torch.Tensor) -> "LayerParams":
        return LayerParams(self.weights, bias)


@dataclass(frozen=True)
class ReluNetwork:
    layers: Tuple[LayerParams, ...]
    bias_mode: BiasMode = BiasMode.ZERO

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise RejectedInputError("a network needs at least one layer")
        width = self.layers[0].width
        for j, layer in enumerate(self.layers):
            if layer.width != width:
                raise RejectedInputError(f"layer {j + 1} has width {layer.width}, expected {width}")
            if self.bias_mode == BiasMode.ZERO and torch.any(layer.bias != 0):
                raise RejectedInputError(f"layer {j + 1} has a nonzero bias in a zero-bias network")

    @property
    def width(self) -> int:
        return self.layers[0].width

    @property
    def depth(self) -> int:
        return len(self.layers)

    def replace_layer(self, index: int, layer: LayerParams, bias_mode: Optional[BiasMode] = None) -> "ReluNetwork":
        layers = list(self.layers)
        layers[index] = layer
        return ReluNetwork(tuple(layers), bias_mode or self.bias_mode)


@dataclass(frozen=True)
class DataSpec:
    """Where a batch came from: `normal` is standard normal, `cluster` is center + radius * N(0, I)."""

    distribution: str = "normal"
    seed: Optional[int] = None
    radius: float = 1.0
    center: Optional[Tuple[float, ...]] = None

    def to_dict(self):
        return {
            "distribution": self.distribution,
            "seed": self.seed,
            "radius": self.radius,
            "center": None if self.center is None else list(self.center),
        }


@dataclass(frozen=True)
class DataBatch:
    points: torch.Tensor
    generator_spec: DataSpec = field(default_factory=DataSpec)

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise RejectedInputError(f"points must be an [M, n] matrix with M >= 1, got {tuple(self.points.shape)}")
        if not torch.isfinite(self.points).all():
            raise RejectedInputError("points must be finite")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def width(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]], spec: Optional[DataSpec] = None) -> "DataBatch":
        return cls(torch.as_tensor(points, dtype=DTYPE), spec or DataSpec(distribution="fixed"))

    @classmethod
    def sample(cls, M: int, n: int, generator: torch.Generator, spec: Optional[DataSpec] = None) -> "DataBatch":
        spec = spec or DataSpec()
        points = torch.randn(M, n, generator=generator, dtype=DTYPE)
        if spec.distribution == "cluster":
            center = torch.zeros(n, dtype=DTYPE) if spec.center is None else torch.as_tensor(spec.center, dtype=DTYPE)
            if center.shape != (n,):
                raise RejectedInputError(f"cluster center must have length {n}")
            points = center + spec.radius * points
        elif spec.distribution != "normal":
            raise RejectedInputError(f"unknown data distribution: {spec.distribution}")
        return cls(points, spec)


@dataclass(frozen=True)
class ForwardTrace:
    """
    Layer-by-layer record of a forward pass over a batch.

    Tensors in `pre_activations` and `post_activations` have the batch on their first dimension; for
    dense networks they are `[M, n]`, for convolutional ones `[M, channels, d, d]`.
    `alive_mask[j][m]` is False once point m had every pre-activation <= 0 at some layer <= j.
    """

    pre_activations: Tuple[torch.Tensor, ...]
    post_activations: Tuple[torch.Tensor, ...]
    alive_mask: Tuple[torch.Tensor, ...]

    @property
    def depth(self) -> int:
        return len(self.alive_mask)

    @property
    def batch_size(self) -> int:
        return self.alive_mask[0].shape[0]


def killed_by(pre: torch.Tensor) -> torch.Tensor:
    # exact comparison, no epsilon
    return (pre.reshape(pre.shape[0], -1) <= 0).all(dim=1)


def trace_layers(layers: Iterable, x: torch.Tensor, apply) -> ForwardTrace:
    pre_activations, post_activations, masks = [], [], []
    alive = torch.ones(x.shape[0], dtype=torch.bool)
    for layer in layers:
        pre = apply(layer, x)
        x = torch.relu(pre)
        alive = alive & ~killed_by(pre)
        pre_activations.append(pre)
        post_activations.append(x)
        masks.append(alive)
    return ForwardTrace(tuple(pre_activations), tuple(post_activations), tuple(masks))


def forward_trace(net: ReluNetwork, batch: DataBatch) -> ForwardTrace:
    if batch.width != net.width:
        raise RejectedInputError(f"batch has {batch.width} columns but the network width is {net.width}")
    return trace_layers(net.layers, batch.points, LayerParams.pre_activation)


def alive_counts(trace: ForwardTrace) -> Tuple[int, ...]:
    return tuple(int(mask.sum()) for mask in trace.alive_mask)


def network_alive(trace: ForwardTrace) -> bool:
    return bool(trace.alive_mask[-1].any())


def classify_event(prev_alive: int, cur_alive: int) -> DeathEvent:
    if prev_alive < 1:
        raise RejectedInputError("no data alive entering the layer, the event is undefined")
    if not 0 <= cur_alive <= prev_alive:
        raise RejectedInputError(f"alive count {cur_alive} is outside [0, {prev_alive}]")
    if cur_alive == prev_alive:
        return DeathEvent.E1
    if cur_alive == 0:
        return DeathEvent.E3
    return DeathEvent.E2


def final_alive_mask(layers: Iterable[LayerParams], x: torch.Tensor) -> torch.Tensor:
    """Alive mask at the last layer, stopping early once every point is dead.

    `layers` may be a lazy iterator; it is not consumed past the layer that kills the batch.
    """
    alive = torch.ones(x.shape[0], dtype=torch.bool)
    for layer in layers:
        pre = layer.pre_activation(x)
        alive = alive & ~killed_by(pre)
        if not alive.any():
            break
        x = torch.relu(pre)
    return alive
