import math
from dataclasses import dataclass
from typing import Tuple

from scipy import stats

from relu_death.errors import RejectedInputError


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Args:
        successes (`int`): number of successful trials, 0 <= successes <= trials.
        trials (`int`): number of trials, at least 1.
        level (`float`, defaults to 0.95): two-sided confidence level in (0, 1).

    Returns:
        `(low, high)` within [0, 1]; low is exactly 0 when there are no successes and high exactly 1
        when every trial succeeded.
    """
    if trials < 1 or not 0 <= successes <= trials:
        raise RejectedInputError(f"invalid counts: {successes} successes in {trials} trials")
    if not 0.0 < level < 1.0:
        raise RejectedInputError(f"confidence level must lie in (0, 1), got {level}")

    z = float(stats.norm.ppf(0.5 + level / 2.0))
    p_hat = successes / trials
    denominator = 1.0 + z**2 / trials
    center = (p_hat + z**2 / (2.0 * trials)) / denominator
    margin = (z / denominator) * math.sqrt(p_hat * (1.0 - p_hat) / trials + z**2 / (4.0 * trials**2))

    low = 0.0 if successes == 0 else max(0.0, center - margin)
    high = 1.0 if successes == trials else min(1.0, center + margin)
    return low, high


@dataclass(frozen=True)
class Estimate:
    p_hat: float
    successes: int
    trials: int
    ci_low: float
    ci_high: float
    ci_level: float = 0.95

    @classmethod
    def from_counts(cls, successes: int, trials: int, level: float = 0.95) -> "Estimate":
        low, high = wilson_interval(successes, trials, level)
        p_hat = successes / trials
        # rounding can push an edge of the interval past p_hat
        return cls(p_hat, int(successes), int(trials), min(low, p_hat), max(high, p_hat), level)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)

    def at_level(self, level: float) -> "Estimate":
        return Estimate.from_counts(self.successes, self.trials, level)

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    def intersects(self, low: float, high: float) -> bool:
        return self.ci_low <= high and self.ci_high >= low

    def __str__(self):
        return (
            f"{self.p_hat:.6f} ({self.successes}/{self.trials}), "
            f"{self.ci_level:.0%} CI [{self.ci_low:.6f}, {self.ci_high:.6f}]"
        )
