import math

import pytest
import torch

from relu_death.core.network import DTYPE, BiasMode, DataBatch, forward_trace
from relu_death.errors import RejectedInputError
from relu_death.init.schemes import InitScheme
from relu_death.montecarlo.estimators import estimate_alive_prob
from relu_death.montecarlo.variance import (
    LayerMoments,
    aggregate_moments,
    conditional_moments,
    network_survey,
    neuron_variance_identity,
    variance_report,
    whitened_data,
)
from tests.helpers import dense_network

HE = InitScheme.he()


def test_identity_layer_moments_are_the_rectified_batch_variance():
    batch = DataBatch.from_points([[1.0, -2.0], [3.0, 4.0], [-1.0, 0.5], [2.0, 2.0]])
    trace = forward_trace(dense_network([[1.0, 0.0], [0.0, 1.0]]), batch)
    moments = conditional_moments(trace.pre_activations[0], trace.post_activations[0])
    rectified = batch.points.clamp(min=0)
    # rectified columns (1, 3, 0, 2) and (0, 4, 0.5, 2)
    assert moments.sigma_sq == pytest.approx(float(rectified.var(dim=0, unbiased=False).sum()), rel=1e-12)
    assert moments.sigma_sq == pytest.approx(1.25 + 2.421875, rel=1e-12)
    assert moments.lambda_sq == pytest.approx(1.5**2 + 1.625**2, rel=1e-12)


def test_aggregate_skips_dead_and_zero_mean_layers():
    trials = [
        [LayerMoments(2.0, 1.0, 4.0), LayerMoments(1.0, 0.0, 2.0)],
        [LayerMoments(4.0, 2.0, 6.0)],
    ]
    report = aggregate_moments(trials, n=2, M=8, k=2)
    first, second = report.layers
    assert first.alive_trials == 2 and first.normalized == 2.0 and first.mean_pre_var == 5.0
    assert second.alive_trials == 1 and second.missing == 1 and second.normalized == 0.0
    assert report.sigma_sum == 2.0
    assert report.tightness_ratio_bound() == math.inf


def test_first_layer_pre_activation_variance_is_n_sigma_squared(seed):
    report = variance_report(4, 1, HE, 256, 1000, seed)
    assert report.layers[0].mean_pre_var == pytest.approx(2.0, rel=0.05)


def test_survey_reuses_the_estimator_streams(seed):
    survey = network_survey(2, 5, HE, BiasMode.ZERO, 32, 60, seed)
    assert survey.estimate == estimate_alive_prob(2, 5, HE, BiasMode.ZERO, 32, 60, seed)
    assert len(survey.variance.layers) == 5
    assert survey.events.entering[0] == 60
    partial = [layer.partial_sigma_sum for layer in survey.variance.layers]
    assert partial == sorted(partial)


def test_variance_needs_two_points(seed):
    with pytest.raises(RejectedInputError):
        variance_report(2, 2, HE, 1, 10, seed)


def test_whitened_data_has_identity_covariance():
    x = whitened_data(512, 3, torch.Generator().manual_seed(4))
    assert torch.allclose(x.mean(dim=0), torch.zeros(3, dtype=DTYPE), atol=1e-12)
    assert torch.allclose(x.T @ x / 512, torch.eye(3, dtype=DTYPE), atol=1e-10)


def test_neuron_variance_identity_holds(seed):
    identity = neuron_variance_identity(2, HE, 4096, seed, M=1024)
    assert abs(identity.residual) <= 0.05 * identity.rhs_half_pre
    assert abs(identity.pre_mean) <= 4 * identity.pre_mean_stderr + 1e-12


def test_identity_terms_vanish_with_the_weight_scale(seed):
    identity = neuron_variance_identity(3, InitScheme.normal(1e-12), 512, seed, M=256)
    assert identity.lhs < 1e-10
    assert identity.rhs_half_pre < 1e-10
    assert identity.rhs_lambda_sq < 1e-10


def test_identity_rejects_small_inputs(seed):
    with pytest.raises(RejectedInputError):
        neuron_variance_identity(2, HE, 1, seed)
    with pytest.raises(RejectedInputError):
        neuron_variance_identity(4, HE, 16, seed, M=4)


@pytest.mark.slow
def test_identity_at_full_scale(seed):
    identity = neuron_variance_identity(2, HE, 100000, seed, M=4096)
    assert abs(identity.residual) <= 0.05 * identity.rhs_half_pre


@pytest.mark.slow
def test_pre_activation_variance_at_full_scale(seed):
    report = variance_report(4, 1, HE, 1024, 100000, seed)
    assert report.layers[0].mean_pre_var == pytest.approx(2.0, rel=0.02)
