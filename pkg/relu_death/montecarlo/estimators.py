"""Monte Carlo estimators for network, point and neuron aliveness."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import torch

from relu_death.core.network import (
    DTYPE,
    BiasMode,
    DataBatch,
    DataSpec,
    DeathEvent,
    ReluNetwork,
    classify_event,
    final_alive_mask,
    forward_trace,
    killed_by,
)
from relu_death.errors import RejectedInputError
from relu_death.init.living import batch_center_init, sign_flip_init
from relu_death.init.schemes import InitScheme, iter_conv_layers, iter_layers
from relu_death.init.seeding import SeedSpec
from relu_death.montecarlo.confidence import Estimate
from relu_death.montecarlo.parallel import map_trials, thread_capped

# trials per generator for the vectorized single-point and single-neuron estimators
TRIAL_BLOCK = 1024


def _check_counts(**counts):
    for name, value in counts.items():
        if value < 1:
            raise RejectedInputError(f"{name} must be at least 1, got {value}")


def trial_streams(seed: SeedSpec) -> Tuple[SeedSpec, SeedSpec]:
    """Data and parameter streams of a network experiment; shared by every estimator for pairing."""
    return seed.substream("data"), seed.substream("net")


def block_sizes(trials: int, block: int) -> List[int]:
    full, rest = divmod(trials, block)
    return [block] * full + ([rest] if rest else [])


@thread_capped
def network_alive_outcomes(
    n: int,
    k: int,
    scheme: InitScheme,
    bias_mode: BiasMode,
    M: int,
    trials: int,
    seed: SeedSpec,
    data_spec: Optional[DataSpec] = None,
    threads: Optional[int] = None,
    progress: bool = False,
) -> List[bool]:
    _check_counts(n=n, k=k, M=M, trials=trials)
    data_seed, net_seed = trial_streams(seed)
    bias_mode = BiasMode(bias_mode)

    def trial(t):
        batch = DataBatch.sample(M, n, data_seed.generator(t), data_spec)
        layers = iter_layers(n, k, scheme, bias_mode, net_seed.generator(t))
        return bool(final_alive_mask(layers, batch.points).any())

    return map_trials(trial, trials, threads, progress, desc=f"n={n} k={k}")


def estimate_alive_prob(
    n: int,
    k: int,
    scheme: InitScheme,
    bias_mode: BiasMode,
    M: int,
    trials: int,
    seed: SeedSpec,
    level: float = 0.95,
    data_spec: Optional[DataSpec] = None,
    threads: Optional[int] = None,
    progress: bool = False,
) -> Estimate:
    """
    Estimate P(n, k): each trial draws M fresh data points and a fresh network, and succeeds when some
    point is still alive after the last layer.
    """
    outcomes = network_alive_outcomes(
        n, k, scheme, bias_mode, M, trials, seed, data_spec=data_spec, threads=threads, progress=progress
    )
    return Estimate.from_counts(sum(outcomes), trials, level)


@thread_capped
def point_alive_outcomes(
    n: int,
    k: int,
    scheme: InitScheme,
    x: Sequence[float],
    trials: int,
    seed: SeedSpec,
    bias_mode: BiasMode = BiasMode.ZERO,
    threads: Optional[int] = None,
) -> torch.Tensor:
    """Per-trial survival of the single point x through k random layers, vectorized over trial blocks."""
    _check_counts(n=n, k=k, trials=trials)
    x = torch.as_tensor(x, dtype=DTYPE).reshape(-1)
    if x.shape != (n,):
        raise RejectedInputError(f"x must have length {n}, got {x.shape[0]}")
    bias_mode = BiasMode(bias_mode)
    if bias_mode == BiasMode.ZERO and not torch.any(x != 0):
        raise RejectedInputError("the zero vector is dead in every zero-bias network")
    distribution = scheme.resolve(n)
    point_seed = seed.substream("point")
    sizes = block_sizes(trials, TRIAL_BLOCK)

    def block(b):
        generator = point_seed.generator(b)
        size = sizes[b]
        state = x.expand(size, n).clone()
        alive = torch.ones(size, dtype=torch.bool)
        for _ in range(k):
            weights = distribution.sample((size, n, n), generator)
            pre = torch.bmm(weights, state.unsqueeze(-1)).squeeze(-1)
            if bias_mode == BiasMode.FREE:
                pre = pre + distribution.sample((size, n), generator)
            alive = alive & ~killed_by(pre)
            state = torch.relu(pre)
        return alive

    return torch.cat(map_trials(block, len(sizes), threads))


def estimate_point_alive_prob(
    n: int,
    k: int,
    scheme: InitScheme,
    x: Sequence[float],
    trials: int,
    seed: SeedSpec,
    bias_mode: BiasMode = BiasMode.ZERO,
    level: float = 0.95,
    threads: Optional[int] = None,
) -> Estimate:
    """Estimate the probability that a fixed nonzero point survives; its exact value is lower_bound(n, k)."""
    outcomes = point_alive_outcomes(n, k, scheme, x, trials, seed, bias_mode, threads=threads)
    return Estimate.from_counts(int(outcomes.sum()), trials, level)


def neuron_killed(weights: Sequence[float], bias: float, x: Sequence[float]) -> bool:
    """True when x lies in the dead half-space {a . x + b <= 0} of the neuron (weights, bias)."""
    weights = torch.as_tensor(weights, dtype=DTYPE)
    x = torch.as_tensor(x, dtype=DTYPE)
    return bool(weights @ x + bias <= 0)


@thread_capped
def estimate_neuron_death_prob(
    n: int,
    scheme: InitScheme,
    x: Sequence[float],
    trials: int,
    seed: SeedSpec,
    bias_mode: BiasMode = BiasMode.FREE,
    level: float = 0.95,
    threads: Optional[int] = None,
) -> Estimate:
    """Estimate gamma, the probability that one random neuron kills the fixed point x (1/2 by symmetry)."""
    _check_counts(n=n, trials=trials)
    x = torch.as_tensor(x, dtype=DTYPE).reshape(-1)
    if x.shape != (n,):
        raise RejectedInputError(f"x must have length {n}, got {x.shape[0]}")
    bias_mode = BiasMode(bias_mode)
    distribution = scheme.resolve(n)
    neuron_seed = seed.substream("neuron")
    sizes = block_sizes(trials, TRIAL_BLOCK)

    def block(b):
        generator = neuron_seed.generator(b)
        pre = distribution.sample((sizes[b], n), generator) @ x
        if bias_mode == BiasMode.FREE:
            pre = pre + distribution.sample((sizes[b],), generator)
        return int((pre <= 0).sum())

    deaths = sum(map_trials(block, len(sizes), threads))
    return Estimate.from_counts(deaths, trials, level)


@dataclass(frozen=True)
class EventFrequencies:
    """Per-layer counts of E1/E2/E3 among trials with data alive entering the layer."""

    entering: Tuple[int, ...]
    counts: Tuple[Tuple[int, int, int], ...]

    def frequency(self, event: DeathEvent) -> Tuple[float, ...]:
        index = list(DeathEvent).index(event)
        return tuple(c[index] / e if e else 0.0 for c, e in zip(self.counts, self.entering))


def tally_events(layer_counts: Sequence[Sequence[int]], M: int, k: int) -> EventFrequencies:
    entering = [0] * k
    counts = [[0, 0, 0] for _ in range(k)]
    order = list(DeathEvent)
    for alive in layer_counts:
        previous = M
        for j, current in enumerate(alive):
            entering[j] += 1
            counts[j][order.index(classify_event(previous, current))] += 1
            previous = current
    return EventFrequencies(tuple(entering), tuple(tuple(c) for c in counts))


@thread_capped
def event_frequencies(
    n: int,
    k: int,
    scheme: InitScheme,
    M: int,
    trials: int,
    seed: SeedSpec,
    bias_mode: BiasMode = BiasMode.ZERO,
    threads: Optional[int] = None,
) -> EventFrequencies:
    _check_counts(n=n, k=k, M=M, trials=trials)
    data_seed, net_seed = trial_streams(seed)
    bias_mode = BiasMode(bias_mode)

    def trial(t):
        x = DataBatch.sample(M, n, data_seed.generator(t)).points
        alive = torch.ones(M, dtype=torch.bool)
        counts = []
        for layer in iter_layers(n, k, scheme, bias_mode, net_seed.generator(t)):
            pre = layer.pre_activation(x)
            alive = alive & ~killed_by(pre)
            counts.append(int(alive.sum()))
            if counts[-1] == 0:
                break
            x = torch.relu(pre)
        return counts

    return tally_events(map_trials(trial, trials, threads), M, k)


class LivingScheme(str, Enum):
    IID = "iid"
    SIGN_FLIP = "sign_flip"
    BATCH_CENTER = "batch_center"


@dataclass(frozen=True)
class LivingFractionStats:
    scheme: LivingScheme
    M: int
    fractions: Tuple[float, ...]
    degenerate_trials: int = 0

    @property
    def trials(self) -> int:
        return len(self.fractions)

    @property
    def mean(self) -> float:
        return math.fsum(self.fractions) / self.trials

    @property
    def stderr(self) -> float:
        if self.trials < 2:
            return math.inf
        mean = self.mean
        variance = math.fsum((f - mean) ** 2 for f in self.fractions) / (self.trials - 1)
        return math.sqrt(variance / self.trials)

    @property
    def minimum(self) -> float:
        return min(self.fractions)

    @property
    def alive_rate(self) -> float:
        return sum(1 for f in self.fractions if f > 0) / self.trials


def final_alive_count(net: ReluNetwork, batch: DataBatch) -> int:
    return int(forward_trace(net, batch).alive_mask[-1].sum())


def living_counts(net: ReluNetwork, batch: DataBatch, schemes: Sequence[LivingScheme]) -> List[Tuple[int, bool]]:
    """Final alive count (and degenerate flag) of one network/batch pair under each scheme."""
    results = []
    for scheme in schemes:
        if scheme == LivingScheme.SIGN_FLIP:
            flipped = sign_flip_init(net, batch)
            results.append((flipped.final_alive, flipped.degenerate))
        elif scheme == LivingScheme.BATCH_CENTER:
            results.append((final_alive_count(batch_center_init(net, batch), batch), False))
        else:
            results.append((final_alive_count(net, batch), False))
    return results


@thread_capped
def living_fraction_comparison(
    n: int,
    k: int,
    schemes: Sequence[LivingScheme],
    M: int,
    trials: int,
    seed: SeedSpec,
    init: Optional[InitScheme] = None,
    bias_mode: BiasMode = BiasMode.ZERO,
    threads: Optional[int] = None,
    progress: bool = False,
) -> Tuple[LivingFractionStats, ...]:
    """
    Living fraction per trial under several initializations, paired: every scheme sees the same base
    network and data in a given trial.
    """
    _check_counts(n=n, k=k, M=M, trials=trials)
    init = init or InitScheme.he()
    schemes = [LivingScheme(s) for s in schemes]
    data_seed, net_seed = trial_streams(seed)
    bias_mode = BiasMode(bias_mode)

    def trial(t):
        batch = DataBatch.sample(M, n, data_seed.generator(t))
        net = ReluNetwork(tuple(iter_layers(n, k, init, bias_mode, net_seed.generator(t))), bias_mode)
        return living_counts(net, batch, schemes)

    rows = map_trials(trial, trials, threads, progress, desc=f"n={n} k={k}")
    return tuple(
        LivingFractionStats(
            scheme,
            M,
            tuple(row[i][0] / M for row in rows),
            sum(1 for row in rows if row[i][1]),
        )
        for i, scheme in enumerate(schemes)
    )


def living_fraction_stats(
    n: int,
    k: int,
    scheme: LivingScheme,
    M: int,
    trials: int,
    seed: SeedSpec,
    init: Optional[InitScheme] = None,
    bias_mode: BiasMode = BiasMode.ZERO,
    threads: Optional[int] = None,
) -> LivingFractionStats:
    """Per-trial fraction of the M points alive at the output; for IID networks the mean is lower_bound(n, k)."""
    (stats,) = living_fraction_comparison(n, k, [scheme], M, trials, seed, init, bias_mode, threads=threads)
    return stats


@thread_capped
def conv_alive_outcomes(
    channels: int,
    kernel: int,
    side: int,
    k: int,
    scheme: InitScheme,
    bias_mode: BiasMode,
    M: int,
    trials: int,
    seed: SeedSpec,
    threads: Optional[int] = None,
    progress: bool = False,
) -> List[bool]:
    _check_counts(channels=channels, kernel=kernel, side=side, k=k, M=M, trials=trials)
    if kernel > side:
        raise RejectedInputError(f"kernel side {kernel} is larger than the image side {side}")
    data_seed, net_seed = trial_streams(seed)
    bias_mode = BiasMode(bias_mode)

    def trial(t):
        images = torch.randn(M, channels, side, side, generator=data_seed.generator(t), dtype=DTYPE)
        layers = iter_conv_layers(channels, kernel, side, k, scheme, bias_mode, net_seed.generator(t))
        return bool(final_alive_mask(layers, images).any())

    return map_trials(trial, trials, threads, progress, desc=f"N={channels} M={kernel} k={k}")


def estimate_conv_alive_prob(
    channels: int,
    kernel: int,
    side: int,
    k: int,
    scheme: InitScheme,
    bias_mode: BiasMode,
    M: int,
    trials: int,
    seed: SeedSpec,
    level: float = 0.95,
    threads: Optional[int] = None,
    progress: bool = False,
) -> Estimate:
    outcomes = conv_alive_outcomes(
        channels, kernel, side, k, scheme, bias_mode, M, trials, seed, threads=threads, progress=progress
    )
    return Estimate.from_counts(sum(outcomes), trials, level)
