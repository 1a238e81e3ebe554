"""Data-dependent initializations that keep part of a batch alive."""

from dataclasses import dataclass
from typing import Tuple

import torch
from loguru import logger

from relu_death.core.network import BiasMode, DataBatch, ReluNetwork, killed_by
from relu_death.errors import RejectedInputError


@dataclass(frozen=True)
class SignFlipResult:
    network: ReluNetwork
    flips: Tuple[bool, ...]
    final_alive: int
    alive_counts: Tuple[int, ...]
    # a point to be revived had an all-zero pre-activation, so the flip could not revive it
    degenerate: bool = False

    def __iter__(self):
        # unpacks as (network, flips, final_alive)
        return iter((self.network, self.flips, self.final_alive))


def _check_batch(net: ReluNetwork, batch: DataBatch):
    if batch.width != net.width:
        raise RejectedInputError(f"batch has {batch.width} columns but the network width is {net.width}")


def sign_flip_init(net: ReluNetwork, batch: DataBatch) -> SignFlipResult:
    """
    Negate the parameters of every layer that kills more than half of the points alive entering it.

    Negation maps each pre-activation z to -z, so it revives every point the layer killed (unless its
    pre-activations were all exactly zero) and leaves at least floor(alive / 2) points per layer.
    """
    _check_batch(net, batch)
    x = batch.points
    alive = torch.ones(batch.size, dtype=torch.bool)
    layers, flips, counts = [], [], []
    degenerate = False
    for j, layer in enumerate(net.layers):
        previous = int(alive.sum())
        pre = layer.pre_activation(x)
        killed = int((alive & killed_by(pre)).sum())
        flip = 2 * killed > previous
        if flip:
            layer = layer.negated()
            pre = layer.pre_activation(x)
            zero = alive & (pre.reshape(pre.shape[0], -1) == 0).all(dim=1)
            if zero.any():
                degenerate = True
                logger.warning(f"layer {j + 1}: {int(zero.sum())} points have all-zero pre-activations and stay dead")
        alive = alive & ~killed_by(pre)
        x = torch.relu(pre)
        layers.append(layer)
        flips.append(flip)
        counts.append(int(alive.sum()))
    network = ReluNetwork(tuple(layers), net.bias_mode)
    return SignFlipResult(network, tuple(flips), counts[-1], tuple(counts), degenerate)


def neuron_means(pre: torch.Tensor) -> torch.Tensor:
    if torch.all(pre == pre[0]):
        return pre[0].clone()
    return pre.mean(dim=0)


def batch_center_init(net: ReluNetwork, batch: DataBatch) -> ReluNetwork:
    """
    Shift every bias so each neuron's mean pre-activation over the points still alive is zero.

    Layers are centered in order, each on the outputs of the already-centered layers before it. Dead points
    are left out of the mean; under free biases they still carry relu(b) forward. While two living points
    have distinct pre-activations, some neuron is positive on one of them, so the batch keeps a living point.
    Weights are untouched; the result has free biases.
    """
    _check_batch(net, batch)
    x = batch.points
    alive = torch.ones(batch.size, dtype=torch.bool)
    layers = []
    for layer in net.layers:
        linear = x @ layer.weights.T
        # b - mean(x A^T + b) == -mean(x A^T); this form cancels exactly on a constant batch
        centered = layer.with_bias(-neuron_means(linear[alive] if alive.any() else linear))
        pre = centered.pre_activation(x)
        alive = alive & ~killed_by(pre)
        x = torch.relu(pre)
        layers.append(centered)
    return ReluNetwork(tuple(layers), BiasMode.FREE)
