# File: tests/test_montecarlo.py

import numpy as np
import pytest

from src.montecarlo import RunningMoments, proportion_se, trial_rng, trial_seed, wilson_interval


class TestSeeds:
    def test_stable_and_distinct(self):
        assert trial_seed(7, 3) == trial_seed(7, 3)
        assert len({trial_seed(7, i) for i in range(100)}) == 100
        assert trial_seed(7, 0) != trial_seed(8, 0)

    def test_rng_matches_seed(self):
        a = trial_rng(1, 2).random(3)
        b = np.random.default_rng(trial_seed(1, 2)).random(3)
        np.testing.assert_allclose(a, b)


class TestIntervals:
    def test_wilson(self):
        lo, hi = wilson_interval(50, 100)
        assert lo < 0.5 < hi
        assert hi - lo == pytest.approx(0.19, abs=0.01)
        assert wilson_interval(0, 0) == (0.0, 1.0)
        assert wilson_interval(10, 10)[1] == pytest.approx(1.0)

    def test_standard_error(self):
        assert proportion_se(50, 100) == pytest.approx(0.05)
        assert proportion_se(0, 0) == 0.0


class TestRunningMoments:
    def test_matches_numpy(self, rng):
        values = rng.standard_normal(1000)
        moments = RunningMoments().update(values[:400]).merge(RunningMoments().update(values[400:]))
        assert moments.count == 1000
        assert moments.mean == pytest.approx(values.mean())
        assert moments.variance == pytest.approx(values.var(ddof=1))
        assert moments.standard_error == pytest.approx(values.std(ddof=1) / np.sqrt(1000))

    def test_degenerate(self):
        assert RunningMoments().update([3.0]).variance == 0.0

    def test_large_offset_keeps_variance(self, rng):
        values = 1e9 + rng.standard_normal(2000)
        moments = RunningMoments()
        for chunk in np.array_split(values, 7):
            moments.update(chunk)
        assert moments.variance == pytest.approx(np.var(values - 1e9, ddof=1), rel=1e-6)

    def test_merge_with_empty(self):
        filled = RunningMoments().update([1.0, 2.0, 3.0])
        assert RunningMoments().merge(filled).mean == pytest.approx(2.0)
        assert filled.merge(RunningMoments()).variance == pytest.approx(1.0)
