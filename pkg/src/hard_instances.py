# File: src/hard_instances.py
"""
Hard instances around the maximally mixed state.

A perturbation is a random sign combination of l orthonormal traceless
Hermitian directions, Delta_z = (c eps / sqrt(d)) (1 / sqrt(l)) sum_i z_i V_i,
clipped so that ||Delta||_inf <= 1/d and sigma_z = I/d + Delta stays a state.
Choosing the directions from the eigenbasis of a fixed scheme's averaged
channel (smallest eigenvalues first) hides the perturbation from that scheme.
"""

import functools
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from .config import (
    DEFAULT_C,
    KAPPA_1,
    MAX_SIGN_VECTORS,
    ORTHONORMAL_TOL,
    TRACE_TOL,
)
from .errors import DimensionError, EnumerationCapError, ValidationError
from .hermitian_core import gram_matrix, hermitian_basis, is_hermitian, schatten_norm
from .mic import MicEigenbasis, average_mic, mic_eigenbasis
from .states_measurements import (
    DensityMatrix,
    MeasurementScheme,
    n_qubits_for,
    pauli_expand,
    pauli_set,
)

logger = logging.getLogger(__name__)


@functools.lru_cache(maxsize=8)
def pauli_basis(d: int) -> np.ndarray:
    """Normalized Pauli basis {P / sqrt(d)} in 'IXYZ' product order, I/sqrt(d) last."""
    paulis = pauli_set(n_qubits_for(d)).observables / math.sqrt(d)
    basis = np.concatenate([paulis, np.eye(d, dtype=np.complex128)[None] / math.sqrt(d)])
    basis.setflags(write=False)
    return basis


def resolve_basis(basis, d: int | None = None) -> tuple[str, np.ndarray]:
    """Turns a basis id, a MicEigenbasis or an explicit array into (id, (d^2, d, d) array)."""
    if isinstance(basis, MicEigenbasis):
        return 'adversarial', basis.vectors
    if isinstance(basis, str):
        if d is None:
            raise ValidationError(f"Basis id '{basis}' needs the dimension d.")
        if basis == 'pauli':
            return basis, pauli_basis(d)
        if basis == 'gell-mann':
            return basis, hermitian_basis(d)
        raise ValidationError(f"Unknown basis id '{basis}'. Use 'pauli' or 'gell-mann'.")
    return 'custom', np.asarray(basis, dtype=np.complex128)


def check_basis(vectors: np.ndarray):
    """Orthonormal Hermitian family of d^2 matrices ending with I/sqrt(d)."""
    if vectors.ndim != 3 or vectors.shape[0] != vectors.shape[1] ** 2:
        raise DimensionError(f"Basis must have shape (d^2, d, d), got {vectors.shape}.")
    d = vectors.shape[1]
    if np.linalg.norm(gram_matrix(vectors) - np.eye(d * d)) > ORTHONORMAL_TOL * d:
        raise ValidationError("Basis is not orthonormal.")
    if not all(is_hermitian(V, 1e-8) for V in vectors):
        raise ValidationError("Basis elements must be Hermitian.")
    if np.linalg.norm(vectors[-1] - np.eye(d) / math.sqrt(d)) > ORTHONORMAL_TOL:
        raise ValidationError("Last basis element must be I/sqrt(d).")


@dataclass(frozen=True, eq=False)
class HardInstance:
    basis_id: str
    basis: np.ndarray
    ell: int
    eps: float
    c: float
    z: np.ndarray
    delta_raw: np.ndarray
    clip_factor: float
    delta_clipped: np.ndarray
    sigma: DensityMatrix
    seed: int | None = None

    @property
    def dim(self) -> int:
        return self.sigma.dim

    @property
    def clipped(self) -> bool:
        return self.clip_factor < 1.0

    def to_json(self) -> dict:
        return {
            'basis': self.basis_id,
            'ell': self.ell,
            'eps': self.eps,
            'c': self.c,
            'z': [int(s) for s in self.z],
            'seed': self.seed,
        }


def ell_range(d: int) -> tuple[int, int]:
    return math.ceil(d * d / 2), d * d - 1


def perturbation_from_signs(
    basis, z, eps: float, c: float = DEFAULT_C, seed: int | None = None, check: bool = True
) -> HardInstance:
    """
    Builds sigma_z for a given sign vector.
    Args:
        basis: MicEigenbasis or an explicit (d^2, d, d) family ending in I/sqrt(d).
        z: Signs in {-1, +1}; its length is l.
        eps (float): Farness parameter.
        c (float): Scale constant.
        seed (int | None): Recorded for replay.
        check (bool): Validate the basis (skip inside enumeration loops).
    Returns:
        HardInstance: Raw and clipped perturbation and the resulting state.
    """
    basis_id, vectors = resolve_basis(basis)
    if check:
        check_basis(vectors)
    d = vectors.shape[1]
    z = np.asarray(z, dtype=np.int8)
    ell = int(z.size)
    low, high = ell_range(d)
    if not low <= ell <= high:
        raise ValidationError(f"l={ell} outside [{low}, {high}] for d={d}.")
    if not np.all(np.abs(z) == 1):
        raise ValidationError("Signs must be -1 or +1.")
    if eps < 0 or c <= 0:
        raise ValidationError(f"Need eps >= 0 and c > 0, got eps={eps}, c={c}.")

    W = np.tensordot(z.astype(float), vectors[:ell], axes=1)
    delta = (c * eps / math.sqrt(d)) / math.sqrt(ell) * W
    delta = 0.5 * (delta + delta.conj().T)
    op_norm = float(np.max(np.abs(np.linalg.eigvalsh(delta)))) if eps > 0 else 0.0
    clip = 1.0 if op_norm <= 1.0 / d else 1.0 / (d * op_norm)
    delta_clipped = clip * delta
    sigma = DensityMatrix(np.eye(d) / d + delta_clipped)
    return HardInstance(basis_id, vectors, ell, float(eps), float(c), z, delta, clip, delta_clipped, sigma, seed)


def sample_perturbation(
    basis, ell: int, eps: float, c: float, rng: np.random.Generator, seed: int | None = None
) -> HardInstance:
    """Draws z uniformly from {-1, +1}^l and builds the instance."""
    z = rng.choice(np.array([-1, 1], dtype=np.int8), size=ell)
    return perturbation_from_signs(basis, z, eps, c, seed=seed)


def enumerate_perturbations(basis, ell: int, eps: float, c: float = DEFAULT_C) -> list[tuple[HardInstance, float]]:
    """All 2^l instances with uniform weights."""
    if 2 ** ell > MAX_SIGN_VECTORS:
        raise EnumerationCapError(f"2^{ell} sign vectors exceed the cap of {MAX_SIGN_VECTORS}.")
    _, vectors = resolve_basis(basis)
    check_basis(vectors)
    weight = 1.0 / 2 ** ell
    return [
        (perturbation_from_signs(vectors, z, eps, c, check=False), weight)
        for z in itertools.product((-1, 1), repeat=ell)
    ]


def adversarial_basis(scheme: MeasurementScheme) -> MicEigenbasis:
    """Eigenbasis of the scheme's averaged MIC: least informative traceless directions first."""
    return mic_eigenbasis(average_mic(scheme))


# --- Operator-norm concentration ---

@dataclass(frozen=True)
class ConcentrationReport:
    d: int
    ell: int
    trials: int
    basis_id: str
    max_ratio: float
    tail_fraction: float
    kappa: float


def _pauli_combination(weights: np.ndarray, d: int) -> np.ndarray:
    # basis index i < d^2 - 1 is Pauli string i + 1; the last index is the identity
    coefficients = np.zeros(d * d)
    ell = weights.size
    coefficients[1:min(ell, d * d - 1) + 1] = weights[:d * d - 1]
    if ell == d * d:
        coefficients[0] = weights[-1]
    return pauli_expand(coefficients / math.sqrt(d), n_qubits_for(d))


def _gell_mann_combination(weights: np.ndarray, d: int) -> np.ndarray:
    """sum_i w_i G_i over hermitian_basis(d) without materializing the basis."""
    full = np.zeros(d * d)
    full[:weights.size] = weights
    pairs = d * (d - 1) // 2
    symmetric, antisymmetric = full[:pairs], full[pairs:2 * pairs]
    diagonal, identity = full[2 * pairs:2 * pairs + d - 1], full[-1]
    rows, cols = np.triu_indices(d, 1)
    W = np.zeros((d, d), dtype=np.complex128)
    W[rows, cols] = (symmetric - 1j * antisymmetric) / math.sqrt(2.0)
    W[cols, rows] = (symmetric + 1j * antisymmetric) / math.sqrt(2.0)
    levels = np.arange(1, d)
    scaled = diagonal / np.sqrt(levels * (levels + 1.0))
    # entry i gets +scaled[l] for every level l > i, and -i * scaled[i] at its own level
    tail = np.concatenate([np.cumsum(scaled[::-1])[::-1], [0.0]])
    own = np.concatenate([[0.0], -levels * scaled])
    W[np.arange(d), np.arange(d)] = tail + own + identity / math.sqrt(d)
    return W


def opnorm_concentration_experiment(
    d: int,
    ell: int,
    basis='pauli',
    trials: int = 500,
    rng: np.random.Generator | None = None,
    kappa: float = KAPPA_1,
    progress: bool = False,
) -> ConcentrationReport:
    """
    Samples W = sum_{i <= l} z_i V_i and records ||W||_inf / sqrt(d).

    'pauli' and 'gell-mann' are built in O(d^2) per trial, so d = 64 is cheap.
    """
    if not 1 <= ell <= d * d:
        raise ValidationError(f"l={ell} must lie in [1, {d * d}].")
    rng = rng or np.random.default_rng()
    if basis == 'pauli':
        combine, basis_id = (lambda w: _pauli_combination(w, d)), 'pauli'
    elif basis == 'gell-mann':
        combine, basis_id = (lambda w: _gell_mann_combination(w, d)), 'gell-mann'
    else:
        basis_id, vectors = resolve_basis(basis, d)
        combine = lambda w: np.tensordot(w, vectors[:w.size], axes=1)  # noqa: E731

    ratios = np.empty(trials)
    for t in tqdm(range(trials), desc=f"opnorm d={d}", disable=not progress):
        z = rng.choice(np.array([-1.0, 1.0]), size=ell)
        W = combine(z)
        ratios[t] = np.max(np.abs(np.linalg.eigvalsh(0.5 * (W + W.conj().T)))) / math.sqrt(d)
    tail = float(np.mean(ratios > kappa))
    logger.info(f"Operator-norm concentration d={d}, l={ell}: max ratio {ratios.max():.3f}, tail {tail}.")
    return ConcentrationReport(d, ell, trials, basis_id, float(ratios.max()), tail, kappa)


# --- Classical analogue ---

def paninski_instance(d: int, eps: float, z, c: float = 1.0) -> np.ndarray:
    """p_z(2t-1) = (1 + c eps z_t)/d and p_z(2t) = (1 - c eps z_t)/d."""
    if d % 2 != 0:
        raise DimensionError(f"Paninski construction needs even d, got {d}.")
    z = np.asarray(z, dtype=float)
    if z.size != d // 2 or not np.all(np.abs(z) == 1):
        raise ValidationError(f"z must hold d/2 = {d // 2} signs.")
    if c * eps > 1:
        raise ValidationError(f"c * eps = {c * eps} exceeds 1.")
    p = np.empty(d)
    p[0::2] = (1.0 + c * eps * z) / d
    p[1::2] = (1.0 - c * eps * z) / d
    return p


# --- Validity ---

@dataclass(frozen=True)
class InstanceValidity:
    is_state: bool
    far: bool
    within_opnorm: bool
    trace_distance: float
    clipped: bool


def validate_hard_instance(h: HardInstance, eps: float | None = None) -> InstanceValidity:
    """
    State validity, far-ness ||Delta-bar||_1 > eps, and whether the raw
    perturbation already satisfied ||Delta||_inf <= 1/d.
    """
    eps = h.eps if eps is None else eps
    d = h.dim
    eigenvalues = np.linalg.eigvalsh(h.sigma.matrix)
    is_state = bool(eigenvalues[0] >= -1e-8 and abs(np.trace(h.sigma.matrix) - 1) <= TRACE_TOL)
    distance = schatten_norm(h.delta_clipped, 1)
    raw_norm = schatten_norm(h.delta_raw, np.inf)
    return InstanceValidity(
        is_state=is_state,
        far=bool(distance > eps),
        within_opnorm=bool(raw_norm <= 1.0 / d + 1e-10),
        trace_distance=distance,
        clipped=h.clipped,
    )


@dataclass(frozen=True)
class BatchValidity:
    draws: int
    valid_states: int
    far_count: int
    clipped_count: int

    @property
    def far_fraction(self) -> float:
        return self.far_count / self.draws if self.draws else 0.0


def hard_instance_batch_check(
    d: int,
    eps: float,
    c: float = DEFAULT_C,
    ell: int | None = None,
    draws: int = 10_000,
    basis='pauli',
    rng: np.random.Generator | None = None,
    progress: bool = False,
) -> BatchValidity:
    """Draws many instances and counts valid states, far instances and clips."""
    rng = rng or np.random.default_rng()
    ell = ell or ell_range(d)[0]
    _, vectors = resolve_basis(basis, d)
    check_basis(vectors)
    valid = far = clipped = 0
    for _ in tqdm(range(draws), desc=f"instances d={d}", disable=not progress):
        z = rng.choice(np.array([-1, 1], dtype=np.int8), size=ell)
        report = validate_hard_instance(perturbation_from_signs(vectors, z, eps, c, check=False))
        valid += report.is_state
        far += report.far
        clipped += report.clipped
    if clipped:
        logger.warning(f"Clipping engaged on {clipped}/{draws} draws at d={d}, eps={eps}.")
    return BatchValidity(draws, valid, far, clipped)
