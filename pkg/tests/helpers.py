import torch

from relu_death.core.network import DTYPE, BiasMode, LayerParams, ReluNetwork


def dense_layer(weights, bias=None) -> LayerParams:
    weights = torch.as_tensor(weights, dtype=DTYPE)
    if bias is None:
        bias = torch.zeros(weights.shape[0], dtype=DTYPE)
    return LayerParams(weights, torch.as_tensor(bias, dtype=DTYPE))


def dense_network(*weights, bias_mode=BiasMode.ZERO) -> ReluNetwork:
    return ReluNetwork(tuple(dense_layer(w) for w in weights), bias_mode)
