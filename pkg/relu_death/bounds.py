"""Closed-form bounds on the probability that a random ReLU network is alive."""

import math
from dataclasses import dataclass

from relu_death.core.network import BiasMode
from relu_death.errors import RejectedInputError

# 1 - 2^-e is exactly representable for e <= 53
EXACT_DYADIC_EXPONENT = 53


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise RejectedInputError(f"invalid bounds: lower={self.lower}, upper={self.upper}")

    def contains_interval(self, low: float, high: float) -> bool:
        return low <= self.upper and high >= self.lower


def _check_positive(**values):
    for name, value in values.items():
        if int(value) != value or value < 1:
            raise RejectedInputError(f"{name} must be a positive integer, got {value}")


def survival_power(deficit_exponent: int, power: int) -> float:
    """(1 - 2^-e)^power, accurate for large powers and large exponents."""
    if power == 0:
        return 1.0
    if deficit_exponent <= EXACT_DYADIC_EXPONENT:
        return math.pow(1.0 - math.ldexp(1.0, -deficit_exponent), power)
    return math.exp(power * math.log1p(-math.ldexp(1.0, -deficit_exponent)))


def _check_gamma(gamma: float):
    if not 0.0 < gamma < 1.0:
        raise RejectedInputError(f"gamma must lie in (0, 1), got {gamma}")


def lower_bound(n: int, k: int, gamma: float = 0.5) -> float:
    """
    Probability that a fixed nonzero point survives k random layers of width n, (1 - gamma^n)^k.

    Args:
        n (`int`): network width.
        k (`int`): network depth.
        gamma (`float`, defaults to 0.5):
            Probability a random neuron kills a fixed point. Symmetric parameter distributions give 1/2.
    """
    _check_positive(n=n, k=k)
    if gamma == 0.5:
        return survival_power(n, k)
    _check_gamma(gamma)
    return math.exp(k * math.log1p(-(gamma**n)))


def upper_bound(n: int, k: int, bias_mode: BiasMode = BiasMode.FREE) -> float:
    _check_positive(n=n, k=k)
    exponent = n * n if BiasMode(bias_mode) == BiasMode.ZERO else n * n + n
    return survival_power(exponent, k - 1)


def bound_pair(n: int, k: int, bias_mode: BiasMode = BiasMode.FREE) -> BoundPair:
    return BoundPair(lower_bound(n, k), upper_bound(n, k, bias_mode))


def min_width(p: float, k: int, gamma: float = 0.5) -> int:
    """
    Least width n with lower_bound(n, k, gamma) >= p.

    Evaluates n = log(1 - p^(1/k)) / log(gamma), rounds up, clamps to 1, then steps the result until
    it satisfies the defining inequality exactly.
    """
    if not 0.0 < p < 1.0:
        raise RejectedInputError(f"p must lie in (0, 1), got {p}")
    _check_positive(k=k)
    _check_gamma(gamma)
    deficit = -math.expm1(math.log(p) / k)
    n = max(1, math.ceil(math.log(deficit) / math.log(gamma)))
    while lower_bound(n, k, gamma) < p:
        n += 1
    while n > 1 and lower_bound(n - 1, k, gamma) >= p:
        n -= 1
    return n


def conv_bounds(N: int, M: int, k: int) -> BoundPair:
    """Bounds for k conv layers with N channels and M x M kernels on any image side d >= M."""
    _check_positive(N=N, M=M, k=k)
    return BoundPair(survival_power(N, k), survival_power(N * (M * M + 1), k - 1))


def parameter_count(n: int, k: int) -> int:
    _check_positive(n=n, k=k)
    return k * (n * n + n)


def tightness_ratio_bound(M: int, sigma_sum: float, n: int) -> float:
    """
    Geometric-series bound 1 / (1 - r), r = M * sigma_sum / (2^n - 1), on the ratio of the alive
    probability of an M-point dataset to lower_bound(n, k). Infinite when r >= 1.
    """
    _check_positive(M=M, n=n)
    if sigma_sum < 0:
        raise RejectedInputError("sigma_sum must be non-negative")
    r = M * sigma_sum / (2.0**n - 1.0)
    return math.inf if r >= 1.0 else 1.0 / (1.0 - r)
