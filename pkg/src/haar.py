# File: src/haar.py
"""
Haar-random unitaries and Monte Carlo checks of Haar-moment closed forms.

Sampling follows the Ginibre + QR recipe: draw a complex Gaussian matrix, take
its QR decomposition and multiply each column of Q by the phase of the matching
diagonal entry of R. The result is exactly Haar distributed.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .config import (
    DOMAIN_DISTANCE_FACTOR,
    DOMAIN_NORM_FACTOR,
    FOURTH_MOMENT_SLACK,
    TRACE_TOL,
    Z_GATE,
    is_power_of_two,
)
from .errors import DimensionError, ValidationError
from .hermitian_core import as_square, schatten_norm
from .montecarlo import RunningMoments, wilson_interval

logger = logging.getLogger(__name__)

BATCH_SIZE = 2048


def sample_haar_unitaries(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draws ``count`` independent Haar unitaries.
    Args:
        d (int): Dimension, at least 1.
        count (int): Number of unitaries.
        rng (np.random.Generator): Random stream.
    Returns:
        np.ndarray: Array of shape (count, d, d).
    """
    if d < 1:
        raise DimensionError(f"Dimension must be positive, got {d}.")
    Z = (rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    L = np.diagonal(R, axis1=-2, axis2=-1)
    Q = Q * (L / np.abs(L))[:, None, :]
    return Q


def sample_haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return sample_haar_unitaries(d, 1, rng)[0]


def _batches(total: int, size: int = BATCH_SIZE):
    done = 0
    while done < total:
        step = min(size, total - done)
        yield step
        done += step


@dataclass(frozen=True)
class HaarSampleReport:
    """Monte Carlo estimate of a Haar expectation next to its reference value."""

    samples: int
    estimate: float
    standard_error: float
    oracle: float
    z_score: float

    @classmethod
    def from_moments(cls, moments: RunningMoments, oracle: float) -> 'HaarSampleReport':
        estimate, se = moments.mean, moments.standard_error
        gap = estimate - oracle
        if se > 0:
            z = gap / se
        else:
            z = 0.0 if abs(gap) <= 1e-9 * max(1.0, abs(oracle)) else math.copysign(math.inf, gap)
        return cls(moments.count, estimate, se, float(oracle), float(z))

    @property
    def passed(self) -> bool:
        """Two-sided gate |z| <= 4 against an exact value."""
        return abs(self.z_score) <= Z_GATE

    @property
    def within_bound(self) -> bool:
        """One-sided gate estimate <= oracle + 4 SE, for upper bounds."""
        return self.estimate <= self.oracle + Z_GATE * self.standard_error + 1e-12


def _conjugated_traces(A: np.ndarray, B: np.ndarray, U: np.ndarray) -> np.ndarray:
    # Tr[A U^dagger B U] for each U in the batch
    W = np.einsum('nki,kl,nlj->nij', np.conj(U), B, U)
    return np.einsum('ij,nji->n', A, W)


def first_moment_check(A, B, samples: int, rng: np.random.Generator) -> HaarSampleReport:
    """
    Estimates E_U Tr[A U^dagger B U] against Tr[A] Tr[B] / d.

    The real part is compared; for Hermitian A and B the trace is real.
    """
    A, B = as_square(A), as_square(B)
    if A.shape != B.shape:
        raise DimensionError(f"A is {A.shape}, B is {B.shape}.")
    d = A.shape[0]
    moments = RunningMoments()
    for step in _batches(samples):
        U = sample_haar_unitaries(d, step, rng)
        moments.update(np.real(_conjugated_traces(A, B, U)))
    oracle = float(np.real(np.trace(A) * np.trace(B) / d))
    return HaarSampleReport.from_moments(moments, oracle)


def projector_second_moment_oracle(M, d: int, k: int) -> float:
    """
    Exact E Tr[Pi_1 M]^2 for the first of k Haar-random rank-(d/k) projectors:
    (Tr[M]^2 (d^2/k - 1) + Tr[M^2] d (1 - 1/k)) / (k (d^2 - 1)).
    """
    M = as_square(M)
    if M.shape[0] != d:
        raise DimensionError(f"M is {M.shape[0]}x{M.shape[0]}, expected d={d}.")
    if d % k != 0:
        raise DimensionError(f"k={k} does not divide d={d}.")
    if d == 1:
        return float(np.real(np.trace(M)) ** 2)
    tr = float(np.real(np.trace(M)))
    tr_sq = float(np.real(np.trace(M @ M)))
    return (tr ** 2 * (d * d / k - 1.0) + tr_sq * d * (1.0 - 1.0 / k)) / (k * (d * d - 1.0))


def _block_traces(M: np.ndarray, U: np.ndarray, k: int) -> np.ndarray:
    """Tr[Pi_x M] for every x, Pi_x built from column block x of each U."""
    count, d, _ = U.shape
    diagonal = np.real(np.einsum('nki,kl,nli->ni', np.conj(U), M, U))
    return diagonal.reshape(count, k, d // k).sum(axis=-1)


def projector_second_moment_check(M, k: int, samples: int, rng: np.random.Generator) -> HaarSampleReport:
    """Monte Carlo of E Tr[Pi_1 M]^2 against :func:`projector_second_moment_oracle`."""
    M = as_square(M)
    d = M.shape[0]
    moments = RunningMoments()
    for step in _batches(samples):
        traces = _block_traces(M, sample_haar_unitaries(d, step, rng), k)
        moments.update(traces[:, 0] ** 2)
    return HaarSampleReport.from_moments(moments, projector_second_moment_oracle(M, d, k))


def fourth_moment_bounds(delta, d: int, k: int) -> tuple[float, float]:
    """Upper bounds on E Tr[Pi_1 D]^4 and E Tr[Pi_1 D]^2 Tr[Pi_2 D]^2 (O(1/d) slack = 10/d)."""
    tr_sq = float(np.real(np.trace(delta @ delta)))
    scale = tr_sq ** 2 / (d * d * k * k)
    slack = FOURTH_MOMENT_SLACK / d
    single = 3.0 * scale * ((1.0 - 1.0 / k) ** 2 + 2.0 * k / d + slack)
    cross = scale * (1.0 - 2.0 / k + 3.0 / k ** 2 + slack)
    return single, cross


def fourth_moment_bound_check(
    delta, d: int, k: int, samples: int, rng: np.random.Generator
) -> tuple[HaarSampleReport, HaarSampleReport]:
    """
    Monte Carlo estimates of E Tr[Pi_1 D]^4 and E Tr[Pi_1 D]^2 Tr[Pi_2 D]^2 for
    traceless D; each report's ``oracle`` is the corresponding upper bound.
    """
    delta = as_square(delta)
    if abs(np.trace(delta)) > TRACE_TOL:
        raise ValidationError(f"Delta must be traceless, Tr = {np.trace(delta):.3e}.")
    if k < 2 or d % k != 0:
        raise DimensionError(f"Need k >= 2 dividing d, got d={d}, k={k}.")
    single_moments, cross_moments = RunningMoments(), RunningMoments()
    for step in _batches(samples):
        traces = _block_traces(delta, sample_haar_unitaries(d, step, rng), k)
        single_moments.update(traces[:, 0] ** 4)
        cross_moments.update(traces[:, 0] ** 2 * traces[:, 1] ** 2)
    single_bound, cross_bound = fourth_moment_bounds(delta, d, k)
    return (
        HaarSampleReport.from_moments(single_moments, single_bound),
        HaarSampleReport.from_moments(cross_moments, cross_bound),
    )


@dataclass(frozen=True)
class DomainCompressionReport:
    samples: int
    k: int
    norm_successes: int
    distance_successes: int
    norm_interval: tuple[float, float]
    distance_interval: tuple[float, float]

    @property
    def fraction_norm(self) -> float:
        return self.norm_successes / self.samples

    @property
    def fraction_distance(self) -> float:
        return self.distance_successes / self.samples

    def standard_errors(self) -> tuple[float, float]:
        n = self.samples
        return (
            math.sqrt(self.fraction_norm * (1 - self.fraction_norm) / n),
            math.sqrt(self.fraction_distance * (1 - self.fraction_distance) / n),
        )


def domain_compression_check(rho, sigma, k: int, samples: int, rng: np.random.Generator) -> DomainCompressionReport:
    """
    Empirical frequencies of the two domain-compression events over Haar U:
    ||p_rho^U||_2 <= 10/sqrt(k), and
    ||p_rho^U - p_sigma^U||_2 >= 0.07 ||rho - sigma||_HS / sqrt(d).
    """
    rho = as_square(getattr(rho, 'matrix', rho))
    sigma = as_square(getattr(sigma, 'matrix', sigma))
    d = rho.shape[0]
    if not is_power_of_two(k) or d % k != 0:
        raise DimensionError(f"k={k} must be a power of 2 dividing d={d}.")
    norm_cap = DOMAIN_NORM_FACTOR / math.sqrt(k)
    distance_floor = DOMAIN_DISTANCE_FACTOR * schatten_norm(rho - sigma, 2) / math.sqrt(d)
    norm_hits = distance_hits = 0
    for step in _batches(samples):
        U = sample_haar_unitaries(d, step, rng)
        p_rho = _block_traces(rho, U, k)
        p_sigma = _block_traces(sigma, U, k)
        norm_hits += int(np.sum(np.linalg.norm(p_rho, axis=1) <= norm_cap))
        gaps = np.linalg.norm(p_rho - p_sigma, axis=1)
        # rho == sigma makes both sides zero up to rounding
        distance_hits += int(np.sum(gaps >= distance_floor - 1e-12))
    return DomainCompressionReport(
        samples, k, norm_hits, distance_hits,
        wilson_interval(norm_hits, samples), wilson_interval(distance_hits, samples),
    )


# --- Degree-2 Weingarten calculus ---

def weingarten_degree2(d: int) -> dict[str, float]:
    """
    Weingarten values up to degree 2, keyed by cycle type:
    '1' (S_1), '1^2' (identity in S_2) and '2' (transposition).
    """
    if d < 2:
        raise DimensionError(f"Degree-2 Weingarten values need d >= 2, got {d}.")
    return {
        '1': 1.0 / d,
        '1^2': 1.0 / (d * d - 1.0),
        '2': -1.0 / (d * (d * d - 1.0)),
    }


def haar_trace_moment_exact(A, B, ell: int) -> float:
    """Exact E_U Tr[A U^dagger B U]^ell for ell in {1, 2}, via the Weingarten sum."""
    A, B = as_square(A), as_square(B)
    d = A.shape[0]
    if ell == 1:
        return float(np.real(np.trace(A) * np.trace(B))) / d
    if ell != 2:
        raise ValidationError(f"Only ell in {{1, 2}} is supported, got {ell}.")
    wg = weingarten_degree2(d)
    # power sums indexed by permutation: identity, transposition
    a_id, a_tr = np.trace(A) ** 2, np.trace(A @ A)
    b_id, b_tr = np.trace(B) ** 2, np.trace(B @ B)
    value = wg['1^2'] * (a_id * b_id + a_tr * b_tr) + wg['2'] * (a_id * b_tr + a_tr * b_id)
    return float(np.real(value))


def expected_compressed_norms(rho, sigma, k: int) -> tuple[float, float]:
    """
    Exact E ||p_rho^U||_2^2 and E ||p_rho^U - p_sigma^U||_2^2 for the k-outcome
    Haar projector measurement.
    """
    rho = as_square(getattr(rho, 'matrix', rho))
    sigma = as_square(getattr(sigma, 'matrix', sigma))
    d = rho.shape[0]
    return (
        k * projector_second_moment_oracle(rho, d, k),
        k * projector_second_moment_oracle(rho - sigma, d, k),
    )
