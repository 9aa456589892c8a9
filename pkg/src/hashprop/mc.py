"""Shared Monte Carlo plumbing: confidence intervals and seed derivation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Z_95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes outside [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class McEstimate:
    """An error-rate estimate with its 95% Wilson interval."""

    errors: int
    trials: int
    estimate: float
    ci_lo: float
    ci_hi: float

    @classmethod
    def from_counts(cls, errors: int, trials: int) -> "McEstimate":
        lo, hi = wilson_interval(errors, trials)
        return cls(errors=errors, trials=trials, estimate=errors / trials,
                   ci_lo=lo, ci_hi=hi)


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-worker generators; results are identical no matter how
    trials are split, because trial i always uses generator i's stream."""
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(count)]
