# File: src/classical_testers.py
"""
Classical subroutines used by the certifiers.

- ``test_identity_l2``: l2 identity tester on a k-ary distribution.
- ``test_prod_bern_l2``: l2 tester for products of D Bernoulli coordinates.
- ``amplify_vote``: threshold vote over repeated tester runs.
- ``eta_simulate`` / ``simulation_outcomes``: l-bit simulation of one d-ary
  sample from many players, each seeing one sample and sending l bits.
"""

import enum
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from .config import (
    CONSTANTS_MODES,
    SIMULATION_ATTEMPT_FACTOR,
    SIMULATION_ETA,
    VOTE_T1,
    VOTE_T2,
    HOEFFDING_ALPHA,
    leading_constant,
)
from .errors import ConfigError, InsufficientSamplesError, ProtocolError, ValidationError

logger = logging.getLogger(__name__)


class Verdict(str, enum.Enum):
    YES = 'YES'
    NO = 'NO'


@dataclass(frozen=True)
class TesterResult:
    verdict: Verdict
    statistics: tuple[float, ...]
    thresholds: tuple[float, ...]
    samples_used: int

    def to_dict(self) -> dict:
        return {
            'verdict': self.verdict.value,
            'statistics': list(self.statistics),
            'thresholds': list(self.thresholds),
            'samples_used': self.samples_used,
        }


# --- l2 identity tester ---

@dataclass(frozen=True)
class TesterConfig:
    """
    Parameters of the l2 identity tester.

    Both modes take a majority over ceil(18 ln(1/delta)) disjoint batches;
    they differ only in the leading constant (1000 for ``'paper'``, the
    calibrated constant otherwise).
    """

    eps: float
    delta: float
    b: float
    mode: str = 'calibrated'
    constant: float | None = None

    def __post_init__(self):
        if not 0 < self.eps < 1 or not 0 < self.delta < 1:
            raise ConfigError(f"Need eps, delta in (0, 1), got eps={self.eps}, delta={self.delta}.")
        if self.b <= 0:
            raise ConfigError(f"Norm bound b must be positive, got {self.b}.")
        if self.mode not in CONSTANTS_MODES:
            raise ConfigError(f"Unknown constants mode '{self.mode}'.")

    @property
    def leading_constant(self) -> float:
        return leading_constant(self.mode, self.constant)

    @property
    def batches(self) -> int:
        return math.ceil(18 * math.log(1.0 / self.delta))

    @property
    def sample_size(self) -> int:
        """n = C b ln(1/delta) / eps^2, at least two samples per batch."""
        n = math.ceil(self.leading_constant * self.b * math.log(1.0 / self.delta) / self.eps ** 2)
        return max(n, 2 * self.batches)


def l2_statistic(counts, q) -> float:
    """
    Unbiased estimate of m^2 ||p - q||_2^2 from the counts of m samples:
    sum_x [(N_x - m q_x)^2 - N_x + N_x (N_x - 1) / (m - 1)].
    """
    counts = np.asarray(counts, dtype=float)
    q = np.asarray(q, dtype=float)
    m = counts.sum()
    if m < 2:
        raise InsufficientSamplesError(f"The l2 statistic needs at least 2 samples, got {int(m)}.")
    return float(np.sum((counts - m * q) ** 2 - counts + counts * (counts - 1) / (m - 1)))


def _checked_labels(samples, k: int) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.int64).reshape(-1)
    if samples.size and (samples.min() < 1 or samples.max() > k):
        raise ValidationError(f"Sample labels must lie in 1..{k}.")
    return samples


def test_identity_l2(q, samples, cfg: TesterConfig, strict: bool = True) -> TesterResult:
    """
    Tests p = q against ||p - q||_2 > eps from samples of p.
    Args:
        q: Reference distribution over [k].
        samples: Labels in 1..k.
        cfg (TesterConfig): Radius, confidence and constants mode.
        strict (bool): Require ``cfg.sample_size`` samples. Certifiers whose
            sample count is random (subsampled groups) pass False.
    Returns:
        TesterResult: NO when a majority of batches exceed m^2 eps^2 / 2.
    """
    q = np.asarray(q, dtype=float)
    samples = _checked_labels(samples, q.size)
    needed = cfg.sample_size if strict else 2 * cfg.batches
    if samples.size < needed:
        raise InsufficientSamplesError(f"Identity tester needs {needed} samples, got {samples.size}.")

    statistics, thresholds = [], []
    for batch in np.array_split(samples, cfg.batches):
        counts = np.bincount(batch - 1, minlength=q.size)
        statistics.append(l2_statistic(counts, q))
        thresholds.append(batch.size ** 2 * cfg.eps ** 2 / 2.0)
    rejections = sum(s > t for s, t in zip(statistics, thresholds))
    verdict = Verdict.NO if rejections > cfg.batches / 2 else Verdict.YES
    return TesterResult(verdict, tuple(statistics), tuple(thresholds), int(samples.size))


# --- Product-Bernoulli tester ---

def prod_bern_sample_size(D: int, eps: float, mode: str = 'calibrated', constant: float | None = None) -> int:
    return math.ceil(leading_constant(mode, constant) * math.sqrt(D) / eps ** 2)


def prod_bern_statistic(samples, q) -> float:
    """sum_i [(W_i - n q_i)^2 - W_i (n - W_i) / (n - 1)], unbiased for n^2 ||p - q||_2^2."""
    samples = np.asarray(samples)
    n = samples.shape[0]
    W = samples.sum(axis=0).astype(float)
    return float(np.sum((W - n * q) ** 2 - W * (n - W) / (n - 1)))


def test_prod_bern_l2(q, samples, eps: float) -> TesterResult:
    """
    Tests a product of Bernoullis p = q against ||p - q||_2 > eps.
    Args:
        q: Means of the D coordinates.
        samples: (n, D) array of 0/1 vectors.
        eps (float): l2 radius.
    """
    q = np.asarray(q, dtype=float)
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[1] != q.size:
        raise ValidationError(f"Samples must have shape (n, {q.size}), got {samples.shape}.")
    if not np.isin(samples, (0, 1)).all():
        raise ValidationError("Product-Bernoulli samples must be 0/1 vectors.")
    n = samples.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"Product-Bernoulli tester needs n >= 2, got {n}.")
    Z = prod_bern_statistic(samples, q)
    threshold = n * n * eps * eps / 2.0
    return TesterResult(Verdict.NO if Z > threshold else Verdict.YES, (Z,), (threshold,), n)


# --- Amplification ---

def amplify_vote(results, t1: float = VOTE_T1, t2: float = VOTE_T2) -> Verdict:
    """NO iff the fraction of NO votes exceeds (t1 + t2) / 2."""
    votes = [Verdict(r) for r in results]
    if not votes:
        raise ValidationError("amplify_vote needs at least one result.")
    fraction = sum(v is Verdict.NO for v in votes) / len(votes)
    return Verdict.NO if fraction > (t1 + t2) / 2.0 else Verdict.YES


def hoeffding_groups(t1: float = VOTE_T1, t2: float = VOTE_T2, alpha: float = HOEFFDING_ALPHA) -> int:
    """Number of repetitions ceil(2 ln(1/alpha) / (t2 - t1)^2)."""
    if not t2 > t1:
        raise ValidationError(f"Need t2 > t1, got t1={t1}, t2={t2}.")
    return math.ceil(2.0 * math.log(1.0 / alpha) / (t2 - t1) ** 2)


# --- l-bit simulation ---

@dataclass(frozen=True)
class SimulationConfig:
    """
    Domain [d] is cut into T parts of s = 2^l - 1 values. Each attempt uses T
    players, player j responsible for part j. There are
    A = max(40 ceil(ln(1/eta)), ceil(ln eta / ln(1 - 1/T))) attempts, so
    P(bottom) = (1 - 1/T)^A <= eta.
    """

    d: int
    ell: int
    eta: float = SIMULATION_ETA

    def __post_init__(self):
        if self.d < 1 or self.ell < 1:
            raise ConfigError(f"Need d >= 1 and l >= 1, got d={self.d}, l={self.ell}.")
        if not 0 < self.eta < 1:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}.")

    @property
    def part_size(self) -> int:
        return 2 ** self.ell - 1

    @property
    def parts(self) -> int:
        return math.ceil(self.d / self.part_size)

    @property
    def attempts(self) -> int:
        base = SIMULATION_ATTEMPT_FACTOR * math.ceil(math.log(1.0 / self.eta))
        if self.parts == 1:
            return base
        return max(base, math.ceil(math.log(self.eta) / math.log1p(-1.0 / self.parts)))

    @property
    def players(self) -> int:
        return self.attempts * self.parts

    @property
    def attempt_success(self) -> float:
        return 1.0 / self.parts

    @property
    def bottom_probability(self) -> float:
        return (1.0 - self.attempt_success) ** self.attempts


def simulation_messages(samples, cfg: SimulationConfig) -> np.ndarray:
    """
    Messages of players laid out as (..., T): player j sends the within-part
    index 1..s of its sample when the sample lies in part j, else 0.
    """
    samples = np.asarray(samples, dtype=np.int64)
    if samples.shape[-1] != cfg.parts:
        raise ValidationError(f"Last axis must hold T={cfg.parts} players, got {samples.shape[-1]}.")
    if samples.size and (samples.min() < 1 or samples.max() > cfg.d):
        raise ValidationError(f"Player samples must lie in 1..{cfg.d}.")
    part, offset = np.divmod(samples - 1, cfg.part_size)
    messages = np.where(part == np.arange(cfg.parts), offset + 1, 0)
    if messages.size and messages.max() >= 2 ** cfg.ell:
        raise ProtocolError(f"Message {messages.max()} does not fit in {cfg.ell} bits.")
    return messages


def _referee(messages: np.ndarray, cfg: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    """
    messages: (B, A, T). The referee privately picks one player per attempt
    and keeps the first attempt whose chosen player spoke; 0 stands for bottom.
    """
    blocks = messages.shape[0]
    chosen = rng.integers(cfg.parts, size=(blocks, cfg.attempts))
    heard = np.take_along_axis(messages, chosen[..., None], axis=-1)[..., 0]
    spoke = heard > 0
    first = np.argmax(spoke, axis=1)
    rows = np.arange(blocks)
    values = chosen[rows, first] * cfg.part_size + heard[rows, first]
    return np.where(spoke.any(axis=1), values, 0)


def eta_simulate(samples, cfg: SimulationConfig, rng: np.random.Generator) -> int | None:
    """
    One simulated sample from M = A T player samples; None is bottom.
    Args:
        samples: M values in 1..d, attempt-major (attempt a uses players a*T .. a*T + T - 1).
        cfg (SimulationConfig): Domain size, bit budget and eta.
        rng (np.random.Generator): The referee's private coins.
    """
    samples = np.asarray(samples, dtype=np.int64).reshape(-1)
    if samples.size != cfg.players:
        raise InsufficientSamplesError(f"Simulation needs M={cfg.players} players, got {samples.size}.")
    messages = simulation_messages(samples.reshape(1, cfg.attempts, cfg.parts), cfg)
    value = int(_referee(messages, cfg, rng)[0])
    return value or None


def simulation_outcomes(stream, cfg: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Runs the protocol on each block of M consecutive samples of ``stream``
    (trailing samples are dropped). Returns one value per block, 0 for bottom.
    """
    stream = np.asarray(stream, dtype=np.int64).reshape(-1)
    blocks = stream.size // cfg.players
    if blocks == 0:
        return np.zeros(0, dtype=np.int64)
    samples = stream[:blocks * cfg.players].reshape(blocks, cfg.attempts, cfg.parts)
    return _referee(simulation_messages(samples, cfg), cfg, rng)


def simulation_law_exact(p, cfg: SimulationConfig) -> tuple[np.ndarray, float]:
    """
    Exact single-attempt behaviour by enumerating every tuple of T player
    samples and every referee choice. Returns (P(output = x | not bottom), P(not bottom)).
    """
    p = np.asarray(p, dtype=float)
    if p.size != cfg.d:
        raise ValidationError(f"p has {p.size} entries, expected d={cfg.d}.")
    if cfg.d ** cfg.parts > 10 ** 6:
        raise ValidationError(f"d^T = {cfg.d ** cfg.parts} tuples is too many to enumerate.")
    law = np.zeros(cfg.d)
    for tuple_ in itertools.product(range(1, cfg.d + 1), repeat=cfg.parts):
        weight = float(np.prod(p[np.asarray(tuple_) - 1]))
        messages = simulation_messages(np.asarray(tuple_), cfg)
        for j, message in enumerate(messages):
            if message:
                law[j * cfg.part_size + message - 1] += weight / cfg.parts
    success = float(law.sum())
    return (law / success if success > 0 else law), success


@dataclass(frozen=True)
class SimulationReport:
    runs: int
    bottom_count: int
    conditional_law: np.ndarray
    p: np.ndarray
    players: int

    @property
    def bottom_rate(self) -> float:
        return self.bottom_count / self.runs

    def to_dict(self) -> dict:
        return {
            'runs': self.runs,
            'players': self.players,
            'bottom_rate': self.bottom_rate,
            'conditional_law': [float(v) for v in self.conditional_law],
            'p': [float(v) for v in self.p],
        }


def empirical_simulation(
    p, cfg: SimulationConfig, runs: int, rng: np.random.Generator, progress: bool = False
) -> SimulationReport:
    """Monte Carlo of the protocol: bottom rate and empirical law of the simulated samples."""
    p = np.asarray(p, dtype=float)
    logger.debug(f"Simulating d={cfg.d}, l={cfg.ell} with M={cfg.players} players per sample.")
    chunk = max(1, 200_000 // cfg.players)
    counts = np.zeros(cfg.d, dtype=np.int64)
    bottoms = 0
    for start in tqdm(range(0, runs, chunk), desc='simulation', disable=not progress):
        step = min(chunk, runs - start)
        stream = rng.choice(cfg.d, size=step * cfg.players, p=p) + 1
        values = simulation_outcomes(stream, cfg, rng)
        bottoms += int(np.sum(values == 0))
        counts += np.bincount(values[values > 0] - 1, minlength=cfg.d)
    law = counts / counts.sum() if counts.sum() else counts.astype(float)
    return SimulationReport(runs, bottoms, law, p, cfg.players)


# --- Calibration ---

def rejection_rate(q, p, cfg: TesterConfig, runs: int, rng: np.random.Generator) -> float:
    """Fraction of runs in which the identity tester says NO on samples of p."""
    n = cfg.sample_size
    rejections = 0
    for _ in range(runs):
        samples = rng.choice(len(p), size=n, p=p) + 1
        rejections += test_identity_l2(q, samples, cfg).verdict is Verdict.NO
    return rejections / runs


def prod_bern_rejection_rate(q, p, eps: float, n: int, runs: int, rng: np.random.Generator) -> float:
    p = np.asarray(p, dtype=float)
    rejections = 0
    for _ in range(runs):
        samples = (rng.random((n, p.size)) < p).astype(np.int8)
        rejections += test_prod_bern_l2(q, samples, eps).verdict is Verdict.NO
    return rejections / runs


