# File: src/chi_square_lab.py
"""
Exact checks of the chi-square machinery on enumerable instances.

Outcome laws of fixed schemes are materialized over all k^n strings, so every
identity is compared with brute force rather than sampled.
"""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

from .config import (
    DEFAULT_C,
    GAME_THRESHOLD,
    KERNEL_ZERO_TOL,
    MAX_OUTCOME_STRINGS,
    ZERO_TRACE_EFFECT,
)
from .errors import AbsoluteContinuityError, DimensionError, EnumerationCapError, ValidationError
from .hard_instances import HardInstance, adversarial_basis, enumerate_perturbations, pauli_basis, resolve_basis
from .hermitian_core import vectorize
from .mic import average_mic, mic_matrix
from .states_measurements import (
    DensityMatrix,
    MeasurementScheme,
    Povm,
    as_density,
    born_distribution,
    maximally_mixed,
)

logger = logging.getLogger(__name__)

IDENTITY_RTOL = 1e-9
IDENTITY_ATOL = 1e-13


@dataclass(frozen=True)
class JointOutcomeLaw:
    """Law of the outcome string of n copies, flattened with copy 1 most significant."""

    n: int
    outcomes: tuple[int, ...]
    probs: np.ndarray

    @property
    def size(self) -> int:
        return self.probs.size


def _fixed_povms(scheme: MeasurementScheme) -> list[Povm]:
    if scheme.kind != 'fixed':
        raise ValidationError("Outcome laws are enumerated for fixed schemes only.")
    povms = scheme.expand()
    if not povms:
        raise ValidationError("Scheme measures no copies.")
    strings = math.prod(p.k for p in povms)
    if strings > MAX_OUTCOME_STRINGS:
        raise EnumerationCapError(f"{strings} outcome strings exceed the cap of {MAX_OUTCOME_STRINGS}.")
    return povms


def enumerate_outcome_law(scheme: MeasurementScheme, rho) -> JointOutcomeLaw:
    """P(x_1..x_n) = prod_i Tr[M^(i)_{x_i} rho] as a flat table."""
    povms = _fixed_povms(scheme)
    rho = as_density(rho)
    marginals = [born_distribution(rho, povm).probs for povm in povms]
    probs = functools.reduce(np.multiply.outer, marginals).reshape(-1)
    return JointOutcomeLaw(len(povms), tuple(p.k for p in povms), probs)


@dataclass(frozen=True)
class Divergences:
    tv: float
    kl: float
    chi_square: float


def divergences(P, Q) -> Divergences:
    """Total variation, KL and chi-square divergence of P from Q."""
    P = np.asarray(getattr(P, 'probs', P), dtype=float)
    Q = np.asarray(getattr(Q, 'probs', Q), dtype=float)
    if P.shape != Q.shape:
        raise DimensionError(f"Laws have shapes {P.shape} and {Q.shape}.")
    outside = Q <= 0
    if np.any(P[outside] > 0):
        raise AbsoluteContinuityError("P puts mass where Q has none.")
    support = ~outside
    tv = 0.5 * float(np.sum(np.abs(P - Q)))
    kl = float(np.sum(rel_entr(P[support], Q[support])))
    chi_square = float(np.sum((P[support] - Q[support]) ** 2 / Q[support]))
    return Divergences(tv, kl, chi_square)


# --- Kernels ---

def _deviation(state, d: int) -> np.ndarray:
    rho = as_density(state)
    if rho.dim != d:
        raise DimensionError(f"State has d={rho.dim}, POVM has d={d}.")
    return rho.matrix - np.eye(d) / d


def mic_kernel(sigma, sigma_prime, povm: Povm) -> float:
    """H(sigma, sigma') = d vec(sigma - I/d)^dagger C vec(sigma' - I/d)."""
    d = povm.dim
    left = vectorize(_deviation(sigma, d))
    right = vectorize(_deviation(sigma_prime, d))
    return float(np.real(d * np.vdot(left, mic_matrix(povm).matrix @ right)))


def mic_kernel_born(sigma, sigma_prime, povm: Povm) -> float:
    """
    Born-rule form sum_x (p_sigma(x) - u(x)) (p_sigma'(x) - u(x)) / u(x), u(x) = Tr[M_x]/d.

    Outcomes with u(x) = 0 are skipped when both deviations vanish.
    """
    d = povm.dim
    left = np.real(np.einsum('xij,ji->x', povm.effects, _deviation(sigma, d)))
    right = np.real(np.einsum('xij,ji->x', povm.effects, _deviation(sigma_prime, d)))
    u = povm.traces / d
    empty = u <= ZERO_TRACE_EFFECT / d
    if np.any(empty & ((np.abs(left) > KERNEL_ZERO_TOL) | (np.abs(right) > KERNEL_ZERO_TOL))):
        raise AbsoluteContinuityError("An outcome with u(x) = 0 has a nonzero deviation.")
    keep = ~empty
    return float(np.sum(left[keep] * right[keep] / u[keep]))


# --- Mixtures over instances ---

def _instance_states(instances) -> tuple[list[DensityMatrix], np.ndarray]:
    states, weights = [], []
    for item, weight in instances:
        states.append(item.sigma if isinstance(item, HardInstance) else as_density(item))
        weights.append(float(weight))
    if not states:
        raise ValidationError("Instance set is empty.")
    weights = np.asarray(weights)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValidationError(f"Instance weights must be nonnegative and sum to 1, got {weights.sum()}.")
    return states, weights


def mixture_chi_square(scheme: MeasurementScheme, instances) -> float:
    """Exact chi^2(E_theta P_sigma_theta || P_mixed) for a fixed scheme."""
    states, weights = _instance_states(instances)
    null = enumerate_outcome_law(scheme, maximally_mixed(scheme.dim))
    mixture = np.zeros(null.size)
    for state, weight in zip(states, weights):
        mixture += weight * enumerate_outcome_law(scheme, state).probs
    return divergences(mixture, null).chi_square


def _pair_kernels(scheme: MeasurementScheme, states: list[DensityMatrix]) -> list[tuple[np.ndarray, int]]:
    """Per distinct POVM slot: the matrix of H over instance pairs and its copy count."""
    _fixed_povms(scheme)
    d = scheme.dim
    deviations = np.array([vectorize(s.matrix - np.eye(d) / d) for s in states])
    cache, slots = {}, []
    for povm, count in scheme.weighted_povms():
        if id(povm) not in cache:
            C = mic_matrix(povm).matrix
            cache[id(povm)] = d * np.real(deviations.conj() @ C @ deviations.T)
        slots.append((cache[id(povm)], count))
    return slots


@dataclass(frozen=True)
class ChiSquareReport:
    chi_square: float
    pollard_rhs: float | None
    kernel: np.ndarray
    decoupled_bound: float | None

    @property
    def pollard_holds(self) -> bool:
        if self.pollard_rhs is None:
            return True
        gap = abs(self.chi_square - self.pollard_rhs)
        return gap <= IDENTITY_RTOL * max(abs(self.chi_square), abs(self.pollard_rhs)) + IDENTITY_ATOL

    @property
    def bound_holds(self) -> bool:
        if self.decoupled_bound is None:
            return True
        return self.chi_square <= self.decoupled_bound + IDENTITY_RTOL

    def to_dict(self) -> dict:
        return {
            'chi_square': self.chi_square,
            'pollard_rhs': self.pollard_rhs,
            'decoupled_bound': self.decoupled_bound,
            'pollard_holds': self.pollard_holds,
            'bound_holds': self.bound_holds,
        }


def pollard_check(scheme: MeasurementScheme, instances) -> ChiSquareReport:
    """
    Exact chi-square of the mixture against E_{theta, theta'} prod_i (1 + H_i) - 1.
    The report's ``kernel`` holds the summed kernels sum_i H_i per instance pair.
    """
    states, weights = _instance_states(instances)
    chi_square = mixture_chi_square(scheme, instances)
    product = np.ones((len(states), len(states)))
    summed = np.zeros_like(product)
    for H, count in _pair_kernels(scheme, states):
        product *= (1.0 + H) ** count
        summed += count * H
    rhs = float(weights @ product @ weights) - 1.0
    report = ChiSquareReport(chi_square, rhs, summed, None)
    if not report.pollard_holds:
        logger.warning(f"Pollard identity off: chi^2={chi_square:.6e}, rhs={rhs:.6e}.")
    return report


def decoupled_bound_check(scheme: MeasurementScheme, instances) -> ChiSquareReport:
    """chi^2 against E exp{n d vec(D)^dagger C-bar vec(D')} - 1, both exact."""
    states, weights = _instance_states(instances)
    chi_square = mixture_chi_square(scheme, instances)
    d, n = scheme.dim, scheme.n_copies
    C_bar = average_mic(scheme).matrix
    deviations = np.array([vectorize(s.matrix - np.eye(d) / d) for s in states])
    exponent = n * d * np.real(deviations.conj() @ C_bar @ deviations.T)
    bound = float(weights @ np.exp(exponent) @ weights) - 1.0
    return ChiSquareReport(chi_square, None, exponent, bound)


# --- Game value ---

@dataclass(frozen=True)
class GameValue:
    chi_fixed_basis: float
    chi_adversarial_basis: float
    basis_id: str
    threshold: float = GAME_THRESHOLD

    @property
    def fixed_fooled(self) -> bool:
        return self.chi_fixed_basis < self.threshold

    @property
    def adversarial_fooled(self) -> bool:
        return self.chi_adversarial_basis < self.threshold

    def to_dict(self) -> dict:
        return {
            'basis': self.basis_id,
            'chi_fixed_basis': self.chi_fixed_basis,
            'chi_adversarial_basis': self.chi_adversarial_basis,
            'threshold': self.threshold,
            'fixed_fooled': self.fixed_fooled,
            'adversarial_fooled': self.adversarial_fooled,
        }


def game_value_demo(
    scheme: MeasurementScheme, eps: float, ell: int, c: float = DEFAULT_C, basis: str = 'pauli'
) -> GameValue:
    """
    Mixture chi-square of the hard instance under a measurement-independent
    basis and under the scheme's adversarial basis. A value below 2/25 means
    no tester built on this scheme succeeds with probability 2/3.
    """
    d = scheme.dim
    fixed_vectors = pauli_basis(d) if basis == 'pauli' else resolve_basis(basis, d)[1]
    chi_fixed = mixture_chi_square(scheme, enumerate_perturbations(fixed_vectors, ell, eps, c))
    chi_adversarial = mixture_chi_square(
        scheme, enumerate_perturbations(adversarial_basis(scheme), ell, eps, c)
    )
    logger.info(f"Game value d={d}, n={scheme.n_copies}: fixed {chi_fixed:.4e}, adversarial {chi_adversarial:.4e}.")
    return GameValue(chi_fixed, chi_adversarial, basis)
