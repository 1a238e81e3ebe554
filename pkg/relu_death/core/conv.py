from dataclasses import dataclass
from typing import Sequence, Tuple

import torch
import torch.nn.functional as F

from relu_death.core.network import DTYPE, ForwardTrace, trace_layers
from relu_death.errors import RejectedInputError


@dataclass(frozen=True)
class ConvLayerParams:
    """
    One convolutional ReLU layer, max(b + sum_l A_l * X_l, 0), stride 1 with "same" zero padding.

    Args:
        kernels (`torch.Tensor` of shape `(out_channels, in_channels, kernel, kernel)`):
            One kernel matrix per (output, input) channel pair.
        bias (`torch.Tensor` of shape `(out_channels,)`):
            One additive parameter per output channel.
        spatial_side (`int`):
            Side d of the square images the layer maps, preserved by the padding.
    """

    kernels: torch.Tensor
    bias: torch.Tensor
    spatial_side: int

    def __post_init__(self):
        if self.kernels.ndim != 4 or self.kernels.shape[2] != self.kernels.shape[3]:
            raise RejectedInputError(f"kernels must be [out, in, M, M], got {tuple(self.kernels.shape)}")
        if self.bias.shape != (self.kernels.shape[0],):
            raise RejectedInputError("bias needs one entry per output channel")
        if self.spatial_side < 1:
            raise RejectedInputError("spatial_side must be positive")
        if self.kernel_side > self.spatial_side:
            raise RejectedInputError(
                f"kernel side {self.kernel_side} is larger than the image side {self.spatial_side}"
            )

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[1]

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def kernel_side(self) -> int:
        return self.kernels.shape[2]

    def pre_activation(self, x: torch.Tensor) -> torch.Tensor:
        # torch convolves by cross-correlation; with a sign-symmetric IID kernel the flip is a relabeling
        return F.conv2d(x, self.kernels, self.bias, stride=1, padding="same")

    def negated(self) -> "ConvLayerParams":
        return ConvLayerParams(-self.kernels, -self.bias, self.spatial_side)


def check_chain(layers: Sequence[ConvLayerParams], images: torch.Tensor):
    if images.ndim != 4 or images.shape[2] != images.shape[3]:
        raise RejectedInputError(f"images must be [M, channels, d, d], got {tuple(images.shape)}")
    channels, side = images.shape[1], images.shape[2]
    for j, layer in enumerate(layers):
        if layer.in_channels != channels:
            raise RejectedInputError(f"layer {j + 1} expects {layer.in_channels} channels, got {channels}")
        if layer.spatial_side != side:
            raise RejectedInputError(f"layer {j + 1} expects side {layer.spatial_side}, got {side}")
        channels = layer.out_channels


def conv_forward_trace(layers: Sequence[ConvLayerParams], images: torch.Tensor) -> ForwardTrace:
    """A point dies at a layer when every spatial entry of every output channel is <= 0."""
    if not layers:
        raise RejectedInputError("a network needs at least one layer")
    check_chain(layers, images)
    return trace_layers(layers, images.to(DTYPE), ConvLayerParams.pre_activation)


def induced_matrix(layer: ConvLayerParams) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Dense form of the layer's affine part on flattened images.

    Returns:
        `(matrix, bias)` with `matrix` of shape `(out * d * d, in * d * d)`, so that
        `conv(x).flatten() == matrix @ x.flatten() + bias` in channel-major order.
    """
    d = layer.spatial_side
    size_in = layer.in_channels * d * d
    basis = torch.eye(size_in, dtype=layer.kernels.dtype).reshape(size_in, layer.in_channels, d, d)
    columns = F.conv2d(basis, layer.kernels, None, stride=1, padding="same")
    matrix = columns.reshape(size_in, -1).T.contiguous()
    return matrix, layer.bias.repeat_interleave(d * d)
