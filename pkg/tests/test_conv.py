import pytest
import torch

from relu_death.core.conv import ConvLayerParams, conv_forward_trace, induced_matrix
from relu_death.core.network import DTYPE, BiasMode, alive_counts, network_alive
from relu_death.errors import RejectedInputError
from relu_death.init.schemes import InitScheme, iter_conv_layers


def single_pixel_layer(value: float) -> ConvLayerParams:
    return ConvLayerParams(torch.tensor([[[[value]]]], dtype=DTYPE), torch.zeros(1, dtype=DTYPE), 1)


def test_unit_kernel_keeps_pixel():
    trace = conv_forward_trace([single_pixel_layer(1.0)], torch.tensor([[[[1.0]]]]))
    assert trace.post_activations[0].tolist() == [[[[1.0]]]]
    assert network_alive(trace)


def test_negative_kernel_kills_pixel():
    trace = conv_forward_trace([single_pixel_layer(-1.0)], torch.tensor([[[[1.0]]]]))
    assert trace.post_activations[0].tolist() == [[[[0.0]]]]
    assert not network_alive(trace)


def brute_force_matrix(kernel: torch.Tensor, d: int) -> torch.Tensor:
    """Matrix of a one-channel 'same' cross-correlation, built entry by entry."""
    side = kernel.shape[0]
    pad = (side - 1) // 2
    matrix = torch.zeros(d * d, d * d, dtype=DTYPE)
    for i in range(d):
        for j in range(d):
            for u in range(side):
                for v in range(side):
                    p, q = i + u - pad, j + v - pad
                    if 0 <= p < d and 0 <= q < d:
                        matrix[i * d + j, p * d + q] = kernel[u, v]
    return matrix


def test_conv_matches_explicit_matrix():
    generator = torch.Generator().manual_seed(11)
    kernel = torch.randn(3, 3, generator=generator, dtype=DTYPE)
    layer = ConvLayerParams(kernel.reshape(1, 1, 3, 3), torch.zeros(1, dtype=DTYPE), 4)
    image = torch.randn(1, 1, 4, 4, generator=generator, dtype=DTYPE)
    expected = brute_force_matrix(kernel, 4)

    matrix, bias = induced_matrix(layer)
    assert matrix.shape == (16, 16)
    assert torch.allclose(matrix, expected, atol=1e-12)
    assert torch.equal(bias, torch.zeros(16, dtype=DTYPE))
    assert torch.allclose(layer.pre_activation(image).flatten(), expected @ image.flatten(), atol=1e-12)


def test_induced_matrix_with_channels_and_bias():
    generator = torch.Generator().manual_seed(5)
    layer = ConvLayerParams(
        torch.randn(2, 2, 3, 3, generator=generator, dtype=DTYPE),
        torch.tensor([0.5, -1.5], dtype=DTYPE),
        5,
    )
    image = torch.randn(1, 2, 5, 5, generator=generator, dtype=DTYPE)
    matrix, bias = induced_matrix(layer)
    assert matrix.shape == (50, 50)
    assert torch.allclose(layer.pre_activation(image).flatten(), matrix @ image.flatten() + bias, atol=1e-12)


def test_point_dies_only_when_every_entry_is_nonpositive():
    layer = ConvLayerParams(torch.ones(1, 1, 1, 1, dtype=DTYPE), torch.zeros(1, dtype=DTYPE), 2)
    images = torch.tensor([[[[-1.0, -2.0], [0.0, 3.0]]], [[[-1.0, -2.0], [0.0, -3.0]]]])
    assert alive_counts(conv_forward_trace([layer], images)) == (1,)


def test_negated_layer_flips_pre_activations():
    generator = torch.Generator().manual_seed(2)
    layer = ConvLayerParams(
        torch.randn(1, 1, 3, 3, generator=generator, dtype=DTYPE), torch.ones(1, dtype=DTYPE), 3
    )
    image = torch.randn(2, 1, 3, 3, generator=generator, dtype=DTYPE)
    assert torch.allclose(layer.negated().pre_activation(image), -layer.pre_activation(image))


def test_rejects_bad_shapes():
    with pytest.raises(RejectedInputError):
        ConvLayerParams(torch.zeros(1, 1, 3, 3, dtype=DTYPE), torch.zeros(1, dtype=DTYPE), 2)
    with pytest.raises(RejectedInputError):
        ConvLayerParams(torch.zeros(1, 1, 3, 2, dtype=DTYPE), torch.zeros(1, dtype=DTYPE), 4)
    layer = ConvLayerParams(torch.zeros(2, 1, 1, 1, dtype=DTYPE), torch.zeros(2, dtype=DTYPE), 2)
    with pytest.raises(RejectedInputError):
        conv_forward_trace([layer, layer], torch.zeros(1, 1, 2, 2))
    with pytest.raises(RejectedInputError):
        conv_forward_trace([layer], torch.zeros(1, 1, 3, 3))
    with pytest.raises(RejectedInputError):
        conv_forward_trace([], torch.zeros(1, 1, 2, 2))


def brute_force_induced(layer: ConvLayerParams):
    d, out_channels, in_channels = layer.spatial_side, layer.out_channels, layer.in_channels
    matrix = torch.zeros(out_channels * d * d, in_channels * d * d, dtype=DTYPE)
    for o in range(out_channels):
        for i in range(in_channels):
            block = brute_force_matrix(layer.kernels[o, i], d)
            matrix[o * d * d:(o + 1) * d * d, i * d * d:(i + 1) * d * d] = block
    return matrix, layer.bias.repeat_interleave(d * d)


@pytest.mark.slow
@pytest.mark.parametrize("trial", range(100))
def test_random_layers_match_the_brute_force_matrix(trial):
    generator = torch.Generator().manual_seed(1000 + trial)
    channels, kernel = [(1, 1), (1, 3), (2, 1), (2, 3)][trial % 4]
    (layer,) = iter_conv_layers(channels, kernel, 8, 1, InitScheme.he(), BiasMode.FREE, generator)
    expected_matrix, expected_bias = brute_force_induced(layer)
    matrix, bias = induced_matrix(layer)
    assert torch.allclose(matrix, expected_matrix, rtol=0, atol=1e-12)
    assert torch.allclose(bias, expected_bias, rtol=0, atol=1e-12)
    image = torch.randn(1, channels, 8, 8, generator=generator, dtype=DTYPE)
    pre = layer.pre_activation(image).flatten()
    assert torch.allclose(pre, expected_matrix @ image.flatten() + expected_bias, rtol=0, atol=1e-12)
