"""Data-conditional variance diagnostics of random ReLU networks."""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch
from loguru import logger

from relu_death.bounds import tightness_ratio_bound
from relu_death.core.network import DTYPE, BiasMode, DataBatch, killed_by
from relu_death.errors import RejectedInputError
from relu_death.init.schemes import InitScheme, iter_layers
from relu_death.init.seeding import SeedSpec
from relu_death.montecarlo.confidence import Estimate
from relu_death.montecarlo.estimators import (
    EventFrequencies,
    _check_counts,
    block_sizes,
    tally_events,
    trial_streams,
)
from relu_death.montecarlo.parallel import map_trials, thread_capped

IDENTITY_BLOCK = 256


@dataclass(frozen=True)
class LayerMoments:
    sigma_sq: float  # ||sigma(F_j(x) | theta)||^2
    lambda_sq: float  # ||lambda_j||^2
    pre_var: float  # pre-activation variance averaged over neurons


def conditional_moments(pre: torch.Tensor, post: torch.Tensor) -> LayerMoments:
    """Moments over the batch (first dimension) of one layer's outputs, for fixed parameters."""
    return LayerMoments(
        float(post.var(dim=0, unbiased=False).sum()),
        float((post.mean(dim=0) ** 2).sum()),
        float(pre.var(dim=0, unbiased=False).mean()),
    )


@dataclass(frozen=True)
class LayerVariance:
    layer: int
    mean_sq_sigma: float
    mean_sq_lambda: float
    normalized: float
    mean_pre_var: float
    alive_trials: int
    # alive trials whose mean output was exactly zero, left out of `normalized`
    missing: int
    partial_sigma_sum: float


@dataclass(frozen=True)
class VarianceReport:
    n: int
    M: int
    layers: Tuple[LayerVariance, ...]

    @property
    def sigma_sum(self) -> float:
        return self.layers[-1].partial_sigma_sum if self.layers else 0.0

    def tightness_ratio_bound(self) -> float:
        return tightness_ratio_bound(self.M, self.sigma_sum, self.n)


def aggregate_moments(trials: Sequence[Sequence[LayerMoments]], n: int, M: int, k: int) -> VarianceReport:
    layers = []
    partial = 0.0
    for j in range(k):
        alive = [moments[j] for moments in trials if len(moments) > j]
        ratios = [m.sigma_sq / m.lambda_sq for m in alive if m.lambda_sq > 0]
        count = len(alive)
        normalized = math.fsum(ratios) / len(ratios) if ratios else 0.0
        partial += normalized
        layers.append(
            LayerVariance(
                layer=j + 1,
                mean_sq_sigma=math.fsum(m.sigma_sq for m in alive) / count if count else 0.0,
                mean_sq_lambda=math.fsum(m.lambda_sq for m in alive) / count if count else 0.0,
                normalized=normalized,
                mean_pre_var=math.fsum(m.pre_var for m in alive) / count if count else 0.0,
                alive_trials=count,
                missing=count - len(ratios),
                partial_sigma_sum=partial,
            )
        )
    missing = sum(layer.missing for layer in layers)
    if missing:
        logger.warning(f"{missing} alive layers had zero mean output and were left out of the normalized variance")
    return VarianceReport(n, M, tuple(layers))


@dataclass(frozen=True)
class NetworkSurvey:
    estimate: Estimate
    events: EventFrequencies
    variance: VarianceReport


@thread_capped
def network_survey(
    n: int,
    k: int,
    scheme: InitScheme,
    bias_mode: BiasMode,
    M: int,
    trials: int,
    seed: SeedSpec,
    level: float = 0.95,
    threads: Optional[int] = None,
    progress: bool = False,
) -> NetworkSurvey:
    """
    One pass over the trials of `estimate_alive_prob` (same seed streams, hence the same estimate) that
    also records per-layer death events and output moments while the network is alive.
    """
    _check_counts(n=n, k=k, M=M, trials=trials)
    data_seed, net_seed = trial_streams(seed)
    bias_mode = BiasMode(bias_mode)

    def trial(t):
        x = DataBatch.sample(M, n, data_seed.generator(t)).points
        alive = torch.ones(M, dtype=torch.bool)
        counts: List[int] = []
        moments: List[LayerMoments] = []
        for layer in iter_layers(n, k, scheme, bias_mode, net_seed.generator(t)):
            pre = layer.pre_activation(x)
            alive = alive & ~killed_by(pre)
            counts.append(int(alive.sum()))
            if counts[-1] == 0:
                break
            x = torch.relu(pre)
            moments.append(conditional_moments(pre, x))
        return counts, moments

    records = map_trials(trial, trials, threads, progress, desc=f"n={n} k={k}")
    successes = sum(1 for counts, _ in records if len(counts) == k and counts[-1] > 0)
    return NetworkSurvey(
        Estimate.from_counts(successes, trials, level),
        tally_events([counts for counts, _ in records], M, k),
        aggregate_moments([moments for _, moments in records], n, M, k),
    )


def variance_report(
    n: int,
    k: int,
    scheme: InitScheme,
    M: int,
    trials: int,
    seed: SeedSpec,
    bias_mode: BiasMode = BiasMode.ZERO,
    threads: Optional[int] = None,
) -> VarianceReport:
    if M < 2:
        raise RejectedInputError("the variance over the data needs at least two points")
    return network_survey(n, k, scheme, bias_mode, M, trials, seed, threads=threads).variance


@dataclass(frozen=True)
class VarianceIdentity:
    """
    Estimates of the three terms of E sigma^2(F) = 1/2 E sigma^2(F~) - E lambda^2 for one random neuron,
    plus the mean pre-activation E lambda~ that symmetry makes zero.
    """

    lhs: float
    rhs_half_pre: float
    rhs_lambda_sq: float
    pre_mean: float
    pre_mean_stderr: float
    trials: int

    @property
    def residual(self) -> float:
        return self.lhs - (self.rhs_half_pre - self.rhs_lambda_sq)


def whitened_data(M: int, n: int, generator: torch.Generator) -> torch.Tensor:
    """M standard normal points, then centered and decorrelated so their sample covariance is the identity."""
    x = torch.randn(M, n, generator=generator, dtype=DTYPE)
    x = x - x.mean(dim=0)
    cholesky = torch.linalg.cholesky(x.T @ x / M)
    return torch.linalg.solve_triangular(cholesky, x.T, upper=False).T


@thread_capped
def neuron_variance_identity(
    n: int,
    scheme: InitScheme,
    trials: int,
    seed: SeedSpec,
    M: int = 4096,
    threads: Optional[int] = None,
) -> VarianceIdentity:
    if trials < 2:
        raise RejectedInputError("the identity needs at least two trials")
    if M <= n:
        raise RejectedInputError(f"whitening needs more than n={n} data points, got M={M}")
    data = whitened_data(M, n, seed.substream("data").generator(0))
    distribution = scheme.resolve(n)
    neuron_seed = seed.substream("neuron")
    sizes = block_sizes(trials, IDENTITY_BLOCK)

    def block(b):
        weights = distribution.sample((sizes[b], n), neuron_seed.generator(b))
        pre = weights @ data.T  # [trials, M]
        post = torch.relu(pre)
        pre_mean = pre.mean(dim=1)
        return (
            post.var(dim=1, unbiased=False).tolist(),
            pre.var(dim=1, unbiased=False).tolist(),
            (post.mean(dim=1) ** 2).tolist(),
            pre_mean.tolist(),
        )

    lhs, pre_var, lambda_sq, pre_mean = ([], [], [], [])
    for block_lhs, block_pre, block_lambda, block_mean in map_trials(block, len(sizes), threads):
        lhs += block_lhs
        pre_var += block_pre
        lambda_sq += block_lambda
        pre_mean += block_mean

    mean_of_means = math.fsum(pre_mean) / trials
    spread = math.fsum((m - mean_of_means) ** 2 for m in pre_mean) / (trials - 1)
    return VarianceIdentity(
        lhs=math.fsum(lhs) / trials,
        rhs_half_pre=0.5 * math.fsum(pre_var) / trials,
        rhs_lambda_sq=math.fsum(lambda_sq) / trials,
        pre_mean=mean_of_means,
        pre_mean_stderr=math.sqrt(spread / trials),
        trials=trials,
    )
