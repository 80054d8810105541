# File: src/mic.py
"""
Measurement information channel (MIC) of a POVM.

For a POVM {M_x} the channel is H(A) = sum_x M_x Tr[M_x A] / Tr[M_x], with
d^2 x d^2 matrix representation C = sum_x vec(M_x) vec(M_x)^dagger / Tr[M_x]
under column-stacking vectorization. Its spectral norms drive the copy
complexity lower bounds, and its eigenbasis is where an adversary hides a
perturbation from a fixed measurement scheme.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg

from .config import HERMITIAN_TOL, ORTHONORMAL_TOL, PSD_FLOOR, ZERO_TRACE_EFFECT
from .errors import DimensionError, EigenbasisError, MicInvariantError, ValidationError
from .hermitian_core import (
    as_square,
    devectorize,
    hermitian_basis,
    random_hermitian,
    vectorize,
)
from .states_measurements import MeasurementScheme, Povm

logger = logging.getLogger(__name__)

UNITAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class MicMatrix:
    dim: int
    matrix: np.ndarray
    source: str = 'povm'
    terms: int = 1


def _effect_vectors(effects: np.ndarray) -> np.ndarray:
    # rows are vec(M_x); transposing then C-order flattening is column stacking
    m, d, _ = effects.shape
    return effects.transpose(0, 2, 1).reshape(m, d * d)


def _check_mic(C: np.ndarray, d: int):
    if np.linalg.norm(C - C.conj().T) > HERMITIAN_TOL * max(1.0, np.linalg.norm(C)):
        raise MicInvariantError("MIC matrix is not Hermitian.")
    smallest = float(np.linalg.eigvalsh(0.5 * (C + C.conj().T))[0])
    if smallest < PSD_FLOOR:
        raise MicInvariantError(f"MIC matrix is not PSD: min eigenvalue {smallest:.3e}.")
    vec_identity = vectorize(np.eye(d))
    residual = float(np.linalg.norm(C @ vec_identity - vec_identity))
    if residual > UNITAL_TOL:
        raise MicInvariantError(f"MIC is not unital: ||C vec(I) - vec(I)|| = {residual:.3e}.")


def _effect_weights(traces: np.ndarray) -> np.ndarray:
    return 1.0 / traces


def mic_matrix(povm: Povm, check: bool = True) -> MicMatrix:
    """
    Matrix representation C of the POVM's information channel.

    Effects with Tr[M_x] <= 1e-12 carry no information and are skipped.
    With ``check`` the PSD, Hermiticity and unitality invariants are enforced.
    """
    traces = povm.traces
    keep = traces > ZERO_TRACE_EFFECT
    if not np.any(keep):
        raise MicInvariantError("Every effect of the POVM has zero trace.")
    vectors = _effect_vectors(povm.effects[keep])
    C = (vectors.T * _effect_weights(traces[keep])) @ vectors.conj()
    C = 0.5 * (C + C.conj().T)
    if check:
        _check_mic(C, povm.dim)
    return MicMatrix(povm.dim, C, 'povm', int(np.sum(keep)))


def mic_apply(C: MicMatrix, A) -> np.ndarray:
    """H(A) computed as devectorize(C vec(A))."""
    A = as_square(A)
    if A.shape[0] != C.dim:
        raise DimensionError(f"A is {A.shape[0]}x{A.shape[0]}, MIC has d={C.dim}.")
    return devectorize(C.matrix @ vectorize(A), C.dim)


def mic_apply_direct(povm: Povm, A) -> np.ndarray:
    """H(A) from the defining sum over effects."""
    A = as_square(A)
    traces = povm.traces
    keep = traces > ZERO_TRACE_EFFECT
    effects = povm.effects[keep]
    weights = np.einsum('xij,ji->x', effects, A) * _effect_weights(traces[keep])
    return np.einsum('x,xij->ij', weights, effects)


@dataclass(frozen=True)
class MicNorms:
    trace: float
    hs: float
    op: float


def mic_norms(C: MicMatrix) -> MicNorms:
    """Schatten norms of the channel, i.e. eigenvalue norms of the PSD matrix C."""
    eigenvalues = np.clip(np.linalg.eigvalsh(C.matrix), 0.0, None)
    return MicNorms(
        trace=float(np.sum(eigenvalues)),
        hs=float(np.sqrt(np.sum(eigenvalues ** 2))),
        op=float(np.max(eigenvalues)),
    )


@dataclass
class MicPropertyReport:
    """Measured values of the MIC invariants, each next to its bound."""

    d: int
    k: int
    psd_min_eig: float
    unital_residual: float
    trace_residual: float
    hermiticity_residual: float
    direct_formula_residual: float
    op_norm: float
    trace_norm: float
    hs_norm: float
    rank: int
    checks: dict = field(default_factory=dict)

    @property
    def zero_eigenspace_dim(self) -> int:
        return self.d * self.d - self.rank

    def violations(self) -> list[str]:
        return [name for name, (_, _, ok) in self.checks.items() if not ok]

    @property
    def passed(self) -> bool:
        return not self.violations()


def mic_property_report(
    povm: Povm, probes: int = 20, rng: np.random.Generator | None = None, tol: float = 1e-8
) -> MicPropertyReport:
    """
    Checks PSD-ness, unitality, trace and Hermiticity preservation (on random
    Hermitian probes), agreement with the direct formula, and the norm chain
    ||H||_inf <= 1, ||H||_1 <= min(d, k), ||H||_HS^2 <= ||H||_inf ||H||_1.
    """
    rng = rng or np.random.default_rng(0)
    d, k = povm.dim, povm.k
    C = mic_matrix(povm, check=False)
    eigenvalues = np.linalg.eigvalsh(C.matrix)
    norms = mic_norms(C)

    identity = np.eye(d)
    unital = float(np.linalg.norm(mic_apply(C, identity) - identity))
    trace_gap = hermiticity_gap = direct_gap = 0.0
    for _ in range(probes):
        X = random_hermitian(d, rng)
        X /= np.linalg.norm(X)
        image = mic_apply(C, X)
        trace_gap = max(trace_gap, abs(np.trace(image) - np.trace(X)))
        hermiticity_gap = max(hermiticity_gap, float(np.linalg.norm(image - image.conj().T)))
        direct_gap = max(direct_gap, float(np.linalg.norm(image - mic_apply_direct(povm, X))))

    preserve_tol = 1e-10
    bound = min(d, k)
    checks = {
        'psd': (float(eigenvalues[0]), PSD_FLOOR, float(eigenvalues[0]) >= PSD_FLOOR),
        'unital': (unital, preserve_tol, unital <= preserve_tol),
        'trace_preserving': (float(trace_gap), preserve_tol, trace_gap <= preserve_tol),
        'hermiticity_preserving': (hermiticity_gap, preserve_tol, hermiticity_gap <= preserve_tol),
        'direct_formula': (direct_gap, preserve_tol, direct_gap <= preserve_tol),
        'op_norm_at_most_1': (norms.op, 1.0, norms.op <= 1.0 + tol),
        'trace_norm_at_most_min_dk': (norms.trace, float(bound), norms.trace <= bound + tol),
        'hs_sq_at_most_op_times_trace': (
            norms.hs ** 2, norms.op * norms.trace, norms.hs ** 2 <= norms.op * norms.trace + tol
        ),
        'hs_sq_at_most_trace': (norms.hs ** 2, norms.trace, norms.hs ** 2 <= norms.trace + tol),
    }
    report = MicPropertyReport(
        d=d, k=k,
        psd_min_eig=float(eigenvalues[0]),
        unital_residual=unital,
        trace_residual=float(trace_gap),
        hermiticity_residual=hermiticity_gap,
        direct_formula_residual=direct_gap,
        op_norm=norms.op, trace_norm=norms.trace, hs_norm=norms.hs,
        rank=int(np.sum(eigenvalues > tol)),
        checks=checks,
    )
    if not report.passed:
        logger.warning(f"MIC property check failed for d={d}, k={k}: {report.violations()}")
    return report


@dataclass(frozen=True, eq=False)
class MicEigenbasis:
    """Hermitian eigenvectors of a MIC, ascending, with I/sqrt(d) pinned last."""

    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def traceless_vectors(self) -> np.ndarray:
        return self.vectors[:-1]

    def apply(self, A) -> np.ndarray:
        """sum_j lambda_j V_j <V_j, A>, the channel rebuilt from its spectrum."""
        A = as_square(A)
        coefficients = np.einsum('jab,ab->j', self.vectors.conj(), A)
        return np.einsum('j,j,jab->ab', self.eigenvalues, coefficients, self.vectors)


def mic_eigenbasis(C: MicMatrix) -> MicEigenbasis:
    """
    Orthonormal Hermitian eigenbasis of the channel.

    The channel is Hermiticity-preserving and self-adjoint, so in the real
    coordinates of the normalized Gell-Mann basis it is a real symmetric
    matrix; its eigenvectors map back to Hermitian matrices. I/sqrt(d) is
    always an eigenvector with eigenvalue 1 and is pinned last; the traceless
    block is diagonalized on its own and sorted ascending.
    """
    d = C.dim
    basis = hermitian_basis(d)
    coordinates = _effect_vectors(basis)
    representation = coordinates.conj() @ C.matrix @ coordinates.T
    if np.max(np.abs(representation.imag)) > ORTHONORMAL_TOL:
        raise EigenbasisError("MIC does not map Hermitian matrices to Hermitian matrices.")
    real_rep = 0.5 * (representation.real + representation.real.T)
    if d == 1:
        return MicEigenbasis(np.array([1.0]), basis)
    leakage = float(np.max(np.abs(real_rep[:-1, -1])))
    if leakage > ORTHONORMAL_TOL or abs(real_rep[-1, -1] - 1.0) > ORTHONORMAL_TOL:
        raise EigenbasisError(f"Identity direction is not an eigenvector (leakage {leakage:.3e}).")

    eigenvalues, real_vectors = scipy.linalg.eigh(real_rep[:-1, :-1])
    order = np.argsort(eigenvalues, kind='stable')
    eigenvalues, real_vectors = eigenvalues[order], real_vectors[:, order]
    traceless = np.einsum('aj,abc->jbc', real_vectors, basis[:-1])
    vectors = np.concatenate([traceless, basis[-1:]], axis=0)
    values = np.concatenate([np.real(eigenvalues), [1.0]])

    gram = np.einsum('iab,jab->ij', vectors.conj(), vectors)
    if np.linalg.norm(gram - np.eye(d * d)) > ORTHONORMAL_TOL:
        raise EigenbasisError("Realified eigenvectors are not orthonormal.")
    return MicEigenbasis(values, vectors)


def average_mic(scheme: MeasurementScheme) -> MicMatrix:
    """C-bar = (1/n) sum_i C_i over the copies of a fixed scheme."""
    if scheme.kind != 'fixed':
        raise ValidationError("average_mic needs a fixed measurement scheme.")
    slots = scheme.weighted_povms()
    total = sum(count for _, count in slots)
    if total == 0:
        raise ValidationError("Cannot average the MIC over an empty scheme.")
    cache = {}
    accumulated = np.zeros((scheme.dim ** 2, scheme.dim ** 2), dtype=np.complex128)
    for povm, count in slots:
        if id(povm) not in cache:
            cache[id(povm)] = mic_matrix(povm).matrix
        accumulated += count * cache[id(povm)]
    return MicMatrix(scheme.dim, accumulated / total, 'average', total)


@dataclass(frozen=True)
class LowerBoundCertificate:
    """Order-only lower bounds on copy complexity for an allowed POVM set."""

    eps: float
    d: int
    sup_hs: float
    sup_trace: float
    povm_count: int

    def __post_init__(self):
        if self.sup_hs <= 0 or self.sup_trace <= 0:
            raise ValidationError(f"MIC norms must be positive, got sup_hs={self.sup_hs}, sup_trace={self.sup_trace}.")
        # ||H||_1 <= d ||H||_HS for any d^2 x d^2 channel matrix
        if self.sup_hs < self.sup_trace / self.d - UNITAL_TOL * max(1.0, self.sup_trace):
            raise ValidationError(
                f"Inconsistent certificate: sup_hs={self.sup_hs} is below sup_trace / d = {self.sup_trace / self.d}."
            )

    @property
    def n_randomized(self) -> float:
        return self.d ** 2 / (self.eps ** 2 * self.sup_hs)

    @property
    def n_fixed(self) -> float:
        return self.d ** 3 / (self.eps ** 2 * self.sup_trace)

    def to_dict(self) -> dict:
        return {
            'eps': self.eps,
            'sup_hs': self.sup_hs,
            'sup_trace': self.sup_trace,
            'n_randomized': self.n_randomized,
            'n_fixed': self.n_fixed,
            'povm_count': self.povm_count,
            'bound_kind': 'order-only',
        }


def lower_bound_certificate(povms: Iterable[Povm], eps: float) -> LowerBoundCertificate:
    """
    Evaluates d^2 / (eps^2 sup ||H||_HS) and d^3 / (eps^2 sup ||H||_1) over the
    given POVMs, with the hidden constant set to 1.
    """
    povms = list(povms)
    if not povms:
        raise ValidationError("Need at least one POVM for a certificate.")
    if not 0 < eps <= 1:
        raise ValidationError(f"eps must lie in (0, 1], got {eps}.")
    d = povms[0].dim
    if any(p.dim != d for p in povms):
        raise DimensionError("All POVMs of a certificate must share one dimension.")
    norms = [mic_norms(mic_matrix(p)) for p in povms]
    return LowerBoundCertificate(
        eps=float(eps), d=d,
        sup_hs=max(n.hs for n in norms),
        sup_trace=max(n.trace for n in norms),
        povm_count=len(povms),
    )


def copy_complexity_orders(d: int, k: int, eps: float) -> dict[str, float]:
    """Order-only headline bounds for k-outcome measurements (constant 1)."""
    m = min(k, d)
    randomized = d ** 2 / (eps ** 2 * math.sqrt(m))
    fixed = d ** 3 / (eps ** 2 * m)
    return {'randomized': randomized, 'fixed': fixed, 'ratio': fixed / randomized}
