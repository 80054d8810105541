# File: src/montecarlo.py
"""Seed splitting, streaming moments and interval helpers for Monte Carlo runs."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest


def trial_seed(master_seed: int, index: int) -> int:
    """
    Derives the seed of trial ``index`` from a master seed.

    The stream is ``SeedSequence(entropy=master_seed, spawn_key=(index,))``,
    so trial seeds replay identically across platforms and worker counts.
    """
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed(master_seed, index))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    ci = binomtest(int(successes), int(trials)).proportion_ci(
        confidence_level=confidence, method='wilson'
    )
    return float(max(0.0, ci.low)), float(min(1.0, ci.high))


def proportion_se(successes: int, trials: int) -> float:
    if trials <= 0:
        return 0.0
    rate = successes / trials
    return math.sqrt(max(rate * (1.0 - rate), 0.0) / trials)


@dataclass
class RunningMoments:
    """
    Streaming count, mean and centered sum of squares of a scalar stream.

    Batches are folded in with the pairwise (Chan) update, so large offsets
    do not cancel catastrophically and partial results from workers merge.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def _combine(self, count: int, mean: float, m2: float):
        if count == 0:
            return self.count, self.mean, self.m2
        total = self.count + count
        delta = mean - self.mean
        return (
            total,
            self.mean + delta * count / total,
            self.m2 + m2 + delta * delta * self.count * count / total,
        )

    def update(self, values) -> 'RunningMoments':
        arr = np.asarray(values, dtype=float).reshape(-1)
        if arr.size:
            batch_mean = float(arr.mean())
            batch_m2 = float(np.sum((arr - batch_mean) ** 2))
            self.count, self.mean, self.m2 = self._combine(int(arr.size), batch_mean, batch_m2)
        return self

    def merge(self, other: 'RunningMoments') -> 'RunningMoments':
        return RunningMoments(*self._combine(other.count, other.mean, other.m2))

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        return max(self.m2, 0.0) / (self.count - 1)

    @property
    def standard_error(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.variance / self.count)
