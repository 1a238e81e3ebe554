import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Tuple

import torch

from relu_death.core.conv import ConvLayerParams
from relu_death.core.network import DTYPE, BiasMode, LayerParams, ReluNetwork
from relu_death.errors import RejectedInputError
from relu_death.init.seeding import SeedSpec


class InitKind(str, Enum):
    HE = "he"
    XAVIER = "xavier"
    NORMAL = "normal"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class Distribution:
    """A zero-mean distribution symmetric under sign flips of each coordinate."""

    family: str
    scale: float  # standard deviation for "normal", half width for "uniform"

    @property
    def variance(self) -> float:
        if self.family == "normal":
            return self.scale**2
        return self.scale**2 / 3.0

    def sample(self, shape, generator: torch.Generator) -> torch.Tensor:
        if self.family == "normal":
            return self.scale * torch.randn(shape, generator=generator, dtype=DTYPE)
        return self.scale * (2.0 * torch.rand(shape, generator=generator, dtype=DTYPE) - 1.0)


@dataclass(frozen=True)
class InitScheme:
    variant: InitKind = InitKind.HE
    variance: Optional[float] = None
    halfwidth: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", InitKind(self.variant))
        if self.variant == InitKind.NORMAL and not (self.variance and self.variance > 0):
            raise RejectedInputError("Normal initialization needs a positive variance")
        if self.variant == InitKind.UNIFORM and not (self.halfwidth and self.halfwidth > 0):
            raise RejectedInputError("UniformSym initialization needs a positive half width")

    @classmethod
    def he(cls):
        return cls(InitKind.HE)

    @classmethod
    def xavier(cls):
        return cls(InitKind.XAVIER)

    @classmethod
    def normal(cls, variance: float):
        return cls(InitKind.NORMAL, variance=variance)

    @classmethod
    def uniform(cls, halfwidth: float):
        return cls(InitKind.UNIFORM, halfwidth=halfwidth)

    @classmethod
    def parse(cls, text: str) -> "InitScheme":
        """Parse `he`, `xavier`, `normal:<variance>` or `uniform:<halfwidth>`."""
        name, _, value = str(text).strip().lower().partition(":")
        try:
            if name == "he":
                return cls.he()
            if name == "xavier":
                return cls.xavier()
            if name == "normal":
                return cls.normal(float(value))
            if name == "uniform":
                return cls.uniform(float(value))
        except ValueError as e:
            raise RejectedInputError(f"invalid initialization scheme '{text}': {e}")
        raise RejectedInputError(f"unknown initialization scheme '{text}'")

    def __str__(self):
        if self.variant == InitKind.NORMAL:
            return f"normal:{self.variance!r}"
        if self.variant == InitKind.UNIFORM:
            return f"uniform:{self.halfwidth!r}"
        return self.variant.value

    def resolve(self, fan_in: int) -> Distribution:
        if self.variant == InitKind.HE:
            return Distribution("normal", math.sqrt(2.0 / fan_in))
        if self.variant == InitKind.XAVIER:
            return Distribution("normal", math.sqrt(1.0 / fan_in))
        if self.variant == InitKind.NORMAL:
            return Distribution("normal", math.sqrt(self.variance))
        return Distribution("uniform", self.halfwidth)


def iter_layers(
    n: int, k: int, scheme: InitScheme, bias_mode: BiasMode, generator: torch.Generator
) -> Iterator[LayerParams]:
    """Draw layers one at a time: weights then (for free biases) the bias of each layer, in order."""
    distribution = scheme.resolve(n)
    for _ in range(k):
        weights = distribution.sample((n, n), generator)
        if bias_mode == BiasMode.FREE:
            bias = distribution.sample((n,), generator)
        else:
            bias = torch.zeros(n, dtype=DTYPE)
        yield LayerParams(weights, bias)


def sample_network(
    n: int, k: int, scheme: InitScheme, bias_mode: BiasMode, seed: SeedSpec, trial_index: int
) -> ReluNetwork:
    if n < 1 or k < 1:
        raise RejectedInputError(f"width and depth must be positive, got n={n}, k={k}")
    bias_mode = BiasMode(bias_mode)
    layers = iter_layers(n, k, scheme, bias_mode, seed.generator(trial_index))
    return ReluNetwork(tuple(layers), bias_mode)


def iter_conv_layers(
    channels: int,
    kernel: int,
    side: int,
    k: int,
    scheme: InitScheme,
    bias_mode: BiasMode,
    generator: torch.Generator,
) -> Iterator[ConvLayerParams]:
    # fan-in of a conv neuron is channels * kernel^2
    distribution = scheme.resolve(channels * kernel * kernel)
    for _ in range(k):
        kernels = distribution.sample((channels, channels, kernel, kernel), generator)
        if bias_mode == BiasMode.FREE:
            bias = distribution.sample((channels,), generator)
        else:
            bias = torch.zeros(channels, dtype=DTYPE)
        yield ConvLayerParams(kernels, bias, side)


def sample_conv_network(
    channels: int,
    kernel: int,
    side: int,
    k: int,
    scheme: InitScheme,
    bias_mode: BiasMode,
    seed: SeedSpec,
    trial_index: int,
) -> Tuple[ConvLayerParams, ...]:
    if min(channels, kernel, side, k) < 1:
        raise RejectedInputError("channels, kernel, side and depth must be positive")
    generator = seed.generator(trial_index)
    return tuple(iter_conv_layers(channels, kernel, side, k, scheme, BiasMode(bias_mode), generator))
