# File: src/experiments.py
"""
Seeded Monte Carlo driver for the certifiers: configuration, single trials,
success estimation with Wilson intervals, and parameter sweeps to CSV.
"""

import dataclasses
import itertools
import json
import logging
import multiprocessing
import os
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from tqdm import tqdm

from .certifiers import CERTIFIER_IDS, CertResult, certify, required_copies
from .classical_testers import Verdict
from .config import (
    CONSTANTS_MODES,
    CSV_COLUMNS,
    DEFAULT_C,
    MIN_TRIALS_FOR_INTERVAL,
    is_power_of_two,
)
from .errors import CertLabError, ConfigError
from .hard_instances import ell_range, resolve_basis, sample_perturbation
from .hermitian_core import schatten_norm
from .montecarlo import trial_seed, wilson_interval
from .states_measurements import CopyOracle, make_standard_states, state_from_json

logger = logging.getLogger(__name__)

INSTANCE_KINDS = ('null', 'plus', 'hard', 'coin', 'file')


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One experiment cell. ``n='auto'`` takes the certifier's budget for the
    constants mode. The reference state is always the maximally mixed one.
    """

    certifier: str
    d: int
    k: int
    eps: float
    n: int | str = 'auto'
    instance: str = 'null'
    trials: int = 200
    seed: int = 0
    mode: str = 'calibrated'
    constant: float | None = None
    ell: int | None = None
    c: float = DEFAULT_C
    basis: str = 'pauli'
    state_file: str | None = None
    groups: int | None = None
    truly_fixed: bool = False

    def __post_init__(self):
        if self.certifier not in CERTIFIER_IDS:
            raise ConfigError(f"Unknown certifier '{self.certifier}'. Expected one of {CERTIFIER_IDS}.")
        if not is_power_of_two(self.d) or not is_power_of_two(self.k):
            raise ConfigError(f"d and k must be powers of 2, got d={self.d}, k={self.k}.")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}.")
        if not 0 < self.eps <= 2:
            raise ConfigError(f"eps must lie in (0, 2], got {self.eps}.")
        if self.mode not in CONSTANTS_MODES:
            raise ConfigError(f"Unknown constants mode '{self.mode}'.")
        if self.instance not in INSTANCE_KINDS:
            raise ConfigError(f"Unknown instance '{self.instance}'. Expected one of {INSTANCE_KINDS}.")
        if self.instance == 'file' and not self.state_file:
            raise ConfigError("Instance 'file' needs state_file.")
        if self.n != 'auto' and (not isinstance(self.n, int) or self.n < 1):
            raise ConfigError(f"n must be 'auto' or a positive integer, got {self.n!r}.")

    @classmethod
    def from_dict(cls, payload: dict) -> 'ExperimentConfig':
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}.")
        try:
            return cls(**payload)
        except TypeError as e:
            raise ConfigError(f"Incomplete experiment config: {e}") from e

    @classmethod
    def from_json(cls, path: str) -> 'ExperimentConfig':
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def budget(self) -> int:
        if self.n == 'auto':
            return required_copies(self.certifier, self.d, self.k, self.eps, self.mode, self.constant, self.groups)
        return int(self.n)


def _instance(config: ExperimentConfig, rho0, rng: np.random.Generator):
    """The hidden state and the verdict a correct certifier gives (None when ungraded)."""
    kind = config.instance
    if kind == 'coin':
        kind = 'plus' if rng.random() < 0.5 else 'null'
    if kind == 'null':
        return rho0, Verdict.YES
    if kind == 'plus':
        rho = make_standard_states(config.d, 'plus')
    elif kind == 'hard':
        ell = config.ell or ell_range(config.d)[0]
        _, vectors = resolve_basis(config.basis, config.d)
        rho = sample_perturbation(vectors, ell, config.eps, config.c, rng).sigma
    else:
        with open(config.state_file, 'r', encoding='utf-8') as f:
            rho = state_from_json(json.load(f))
    distance = schatten_norm(rho.matrix - rho0.matrix, 1)
    if distance > config.eps:
        return rho, Verdict.NO
    if distance <= 1e-12:
        return rho, Verdict.YES
    return rho, None


def run_trial(config: ExperimentConfig, seed: int) -> CertResult:
    """
    One certification run; deterministic in (config, seed). The seed is split
    into independent streams for the instance, the oracle and the certifier.
    """
    instance_rng, oracle_rng, certifier_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(3)
    )
    rho0 = make_standard_states(config.d, 'mixed')
    rho, expected = _instance(config, rho0, instance_rng)
    oracle = CopyOracle(rho, config.budget, oracle_rng)
    result = certify(
        config.certifier, oracle, rho0, config.eps, config.k, certifier_rng,
        mode=config.mode, constant=config.constant, groups=config.groups,
        truly_fixed=config.truly_fixed, seed=int(seed),
    )
    expected_value = expected.value if expected is not None else None
    return dataclasses.replace(result, diagnostics={**result.diagnostics, 'expected': expected_value})


def _trial_worker(args) -> CertResult:
    config, seed = args
    return run_trial(config, seed)


@dataclass(frozen=True)
class ExperimentRecord:
    config: ExperimentConfig
    successes: int
    graded: int
    interval: tuple[float, float]
    wall_ms: float
    seeds: tuple[int, ...] = field(repr=False, default=())

    @property
    def rate(self) -> float:
        return self.successes / self.graded if self.graded else float('nan')

    def to_row(self) -> dict:
        return {
            'certifier': self.config.certifier,
            'd': self.config.d,
            'k': self.config.k,
            'eps': self.config.eps,
            'n': self.config.budget,
            'mode': self.config.mode,
            'trials': self.config.trials,
            'successes': self.successes,
            'rate': self.rate,
            'wilson_lo': self.interval[0],
            'wilson_hi': self.interval[1],
            'seed': self.config.seed,
            'wall_ms': self.wall_ms,
        }

    def to_dict(self) -> dict:
        return {**self.to_row(), 'graded': self.graded, 'config': self.config.to_dict(), 'seeds': list(self.seeds)}


def estimate_success(
    config: ExperimentConfig, workers: int = 1, progress: bool = False, timing: bool = True
) -> ExperimentRecord:
    """
    Runs ``config.trials`` trials with seeds derived from the master seed by
    trial index and reports the success rate over graded trials with a 95%
    Wilson interval. Results are merged by trial index, so the record does not
    depend on ``workers``; with ``timing=False`` wall_ms is 0 and the record
    is byte-reproducible.
    """
    if config.trials < MIN_TRIALS_FOR_INTERVAL:
        logger.warning(f"Only {config.trials} trials; the Wilson interval will be wide.")
    seeds = [trial_seed(config.seed, i) for i in range(config.trials)]
    jobs = [(config, s) for s in seeds]
    start = time.perf_counter()
    desc = f"{config.certifier} d={config.d} k={config.k}"
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            results = list(tqdm(pool.imap(_trial_worker, jobs), total=len(jobs), desc=desc, disable=not progress))
    else:
        results = [_trial_worker(job) for job in tqdm(jobs, desc=desc, disable=not progress)]
    wall_ms = (time.perf_counter() - start) * 1000.0 if timing else 0.0

    graded = [r for r in results if r.diagnostics.get('expected') is not None]
    successes = sum(r.verdict.value == r.diagnostics['expected'] for r in graded)
    if len(graded) < len(results):
        logger.info(f"{len(results) - len(graded)} trials had an ungraded instance.")
    record = ExperimentRecord(
        config, successes, len(graded), wilson_interval(successes, len(graded)), wall_ms, tuple(seeds)
    )
    logger.info(f"{desc}: {successes}/{len(graded)} correct, interval {record.interval}.")
    return record


def expand_grid(base: ExperimentConfig | dict, axes: dict) -> list[ExperimentConfig]:
    """Cartesian product of ``axes`` (field -> values) over a base config."""
    base = base.to_dict() if isinstance(base, ExperimentConfig) else dict(base)
    names = list(axes)
    return [
        ExperimentConfig.from_dict({**base, **dict(zip(names, values))})
        for values in itertools.product(*(axes[name] for name in names))
    ]


def sweep(
    grid: list[ExperimentConfig], workers: int = 1, progress: bool = False, timing: bool = True
) -> pd.DataFrame:
    """
    One row per cell in CSV_COLUMNS order. A failing cell is logged, its row
    carries only the config columns, and its message lands in
    ``df.attrs['errors']`` keyed by cell index.
    """
    if not grid:
        raise ConfigError("Sweep grid is empty.")
    logger.info(f"--- Starting sweep over {len(grid)} cells ---")
    rows, errors = [], {}
    for index, config in enumerate(grid):
        try:
            rows.append(estimate_success(config, workers, progress, timing).to_row())
        except CertLabError as e:
            logger.warning(f"Sweep cell {index} failed: {e}")
            errors[index] = str(e)
            rows.append({
                'certifier': config.certifier, 'd': config.d, 'k': config.k, 'eps': config.eps,
                'n': config.n, 'mode': config.mode, 'trials': config.trials, 'seed': config.seed,
            })
    table = pd.DataFrame(rows, columns=CSV_COLUMNS)
    table.attrs['errors'] = errors
    logger.info(f"Sweep finished: {len(grid) - len(errors)} cells ok, {len(errors)} failed.")
    return table


def write_table(table: pd.DataFrame, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    table.to_csv(path, index=False)
    logger.info(f"Wrote {len(table)} rows to {path}")
