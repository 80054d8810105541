# File: src/states_measurements.py
"""
Quantum states, POVMs and the copy-budget oracle.

Everything a certifier touches goes through here: density matrices, Born-rule
outcome laws, the single-copy measurement oracle, measurement schemes, the
Pauli observables, maximal mutually unbiased bases (MUBs) and the coarse
Haar-projector POVM.
"""

import functools
import itertools
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import (
    BORN_CLIP_TOL,
    POVM_COMPLETENESS_TOL,
    PSD_FLOOR,
    RECONSTRUCTION_TOL,
    TRACE_TOL,
    is_power_of_two,
)
from .errors import (
    BudgetExhaustedError,
    DimensionError,
    InvalidStateError,
    NegativeProbabilityError,
    PovmValidationError,
    ValidationError,
)
from .haar import sample_haar_unitary
from .hermitian_core import as_square, dagger, hermiticity_residual, is_hermitian

logger = logging.getLogger(__name__)


# --- Density matrices ---

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A PSD Hermitian d x d matrix with unit trace."""

    matrix: np.ndarray

    def __post_init__(self):
        M = as_square(self.matrix)
        if not is_hermitian(M):
            raise InvalidStateError(
                f"State is not Hermitian (residual {hermiticity_residual(M):.3e})."
            )
        trace = np.trace(M)
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"State trace is {trace.real:.12f}, expected 1.")
        smallest = float(np.linalg.eigvalsh(0.5 * (M + dagger(M)))[0])
        if smallest < PSD_FLOOR:
            raise InvalidStateError(f"State has negative eigenvalue {smallest:.3e}.")
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, 'matrix', M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix(np.eye(d, dtype=np.complex128) / d)


_BASIS_PATTERN = re.compile(r'^basis\((\d+)\)$')


def make_standard_states(
    d: int,
    which: str,
    rng: np.random.Generator | None = None,
    index: int = 0,
) -> DensityMatrix:
    """
    Builds one of the standard states.
    Args:
        d (int): Dimension.
        which (str): 'mixed', 'plus', 'basis' (with ``index``, or the form
            'basis(j)'), or 'random'.
        rng (np.random.Generator | None): Needed for 'random'.
        index (int): 0-based basis vector for 'basis'.
    Returns:
        DensityMatrix: The requested state.
    """
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise DimensionError(f"Invalid dimension d={d}.")
    match = _BASIS_PATTERN.match(which)
    if match:
        which, index = 'basis', int(match.group(1))

    if which == 'mixed':
        return maximally_mixed(d)
    if which == 'basis':
        if not 0 <= index < d:
            raise DimensionError(f"Basis index {index} out of range for d={d}.")
        M = np.zeros((d, d), dtype=np.complex128)
        M[index, index] = 1.0
        return DensityMatrix(M)
    if which in ('plus', 'random') and not is_power_of_two(d):
        raise DimensionError(f"State '{which}' needs d to be a power of 2, got d={d}.")
    if which == 'plus':
        return DensityMatrix(np.full((d, d), 1.0 / d, dtype=np.complex128))
    if which == 'random':
        if rng is None:
            raise ValidationError("A random state needs an rng.")
        U = sample_haar_unitary(d, rng)
        spectrum = rng.dirichlet(np.ones(d))
        M = (U * spectrum) @ dagger(U)
        M = 0.5 * (M + dagger(M))
        return DensityMatrix(M / np.trace(M).real)
    raise ValidationError(f"Unknown standard state '{which}'.")


def as_density(state) -> DensityMatrix:
    return state if isinstance(state, DensityMatrix) else DensityMatrix(np.asarray(state))


# --- POVMs ---

@dataclass(frozen=True, eq=False)
class Povm:
    """Finite POVM; outcome labels are 1..k in the order of ``effects``."""

    effects: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'effects', _checked_effects(self.effects))

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def k(self) -> int:
        return self.effects.shape[0]

    @property
    def traces(self) -> np.ndarray:
        return np.real(np.einsum('xii->x', self.effects))


def _checked_effects(candidate) -> np.ndarray:
    try:
        effects = np.array([np.asarray(M, dtype=np.complex128) for M in candidate])
    except (TypeError, ValueError) as e:
        raise PovmValidationError('shape', f"effects are not equally sized matrices ({e}).")
    if effects.ndim != 3 or effects.shape[0] == 0:
        if effects.size == 0 or effects.ndim == 1:
            raise PovmValidationError('empty', "a POVM needs at least one effect.")
        raise PovmValidationError('shape', f"effects have shape {effects.shape}.")
    k, rows, cols = effects.shape
    if rows != cols:
        raise PovmValidationError('shape', f"effects are {rows}x{cols}, not square.")
    if not np.all(np.isfinite(effects)):
        raise PovmValidationError('shape', "effects have non-finite entries.")
    for x, M in enumerate(effects):
        if not is_hermitian(M):
            raise PovmValidationError('psd', f"effect {x + 1} is not Hermitian.")
        smallest = float(np.linalg.eigvalsh(0.5 * (M + dagger(M)))[0])
        if smallest < PSD_FLOOR:
            raise PovmValidationError('psd', f"effect {x + 1} has eigenvalue {smallest:.3e}.")
    residual = float(np.linalg.norm(effects.sum(axis=0) - np.eye(rows), 'fro'))
    if residual > POVM_COMPLETENESS_TOL:
        raise PovmValidationError('completeness', f"||sum M_x - I||_HS = {residual:.3e}.")
    effects = 0.5 * (effects + dagger(effects))
    effects.setflags(write=False)
    return effects


def validate_povm(candidate) -> Povm:
    """
    Checks a candidate set of effects and wraps it as a :class:`Povm`.
    Raises:
        PovmValidationError: ``.invariant`` names the violated invariant.
    """
    if isinstance(candidate, Povm):
        return candidate
    return Povm(candidate)


def canonical_povm(d: int) -> Povm:
    effects = np.zeros((d, d, d), dtype=np.complex128)
    effects[np.arange(d), np.arange(d), np.arange(d)] = 1.0
    return Povm(effects)


def basis_povm(U) -> Povm:
    """Rank-1 measurement in the orthonormal basis given by the columns of U."""
    U = as_square(U)
    return Povm(np.einsum('ix,jx->xij', U, np.conj(U)))


def trivial_povm(d: int) -> Povm:
    return Povm(np.eye(d, dtype=np.complex128)[None, :, :])


def random_povm(d: int, k: int, rng: np.random.Generator) -> Povm:
    """k effects S^{-1/2} G_x G_x^dagger S^{-1/2} from Ginibre G_x, S their sum."""
    if d < 1 or k < 1:
        raise DimensionError(f"Need d >= 1 and k >= 1, got d={d}, k={k}.")
    G = rng.standard_normal((k, d, d)) + 1j * rng.standard_normal((k, d, d))
    A = G @ np.conj(np.transpose(G, (0, 2, 1)))
    eigenvalues, V = np.linalg.eigh(A.sum(axis=0))
    inv_sqrt = (V / np.sqrt(eigenvalues)) @ dagger(V)
    effects = inv_sqrt @ A @ inv_sqrt
    return Povm(0.5 * (effects + np.conj(np.transpose(effects, (0, 2, 1)))))


@dataclass(frozen=True)
class OutcomeDistribution:
    probs: np.ndarray

    @property
    def k(self) -> int:
        return self.probs.shape[0]


def born_distribution(rho, povm: Povm) -> OutcomeDistribution:
    """
    Born's rule p(x) = Tr[rho M_x].

    Probabilities in [-1e-10, 0) are clipped to 0 and the vector is renormalized.
    """
    rho = as_density(rho)
    if rho.dim != povm.dim:
        raise DimensionError(f"State has d={rho.dim}, POVM has d={povm.dim}.")
    probs = np.real(np.einsum('xij,ji->x', povm.effects, rho.matrix))
    if probs.min() < -BORN_CLIP_TOL:
        raise NegativeProbabilityError(f"Born probability {probs.min():.3e} is negative.")
    probs = np.clip(probs, 0.0, None)
    return OutcomeDistribution(probs / probs.sum())


# --- Measurement schemes ---

Segment = tuple[tuple[Povm, ...], int]


@dataclass(frozen=True, eq=False)
class MeasurementScheme:
    """
    A non-adaptive unentangled measurement scheme.

    Fixed schemes are stored as segments ``(pattern, repeats)``: the segment
    measures copies with ``pattern[0], pattern[1], ...`` cyclically,
    ``repeats`` times over. Randomized schemes hold a plan that maps a seed to
    a fixed scheme.
    """

    kind: str
    dim: int
    segments: tuple[Segment, ...] = ()
    plan: Callable[[int], 'MeasurementScheme'] | None = field(default=None, repr=False)
    planned_copies: int = 0

    def __post_init__(self):
        if self.kind not in ('fixed', 'randomized'):
            raise ValidationError(f"Unknown scheme kind '{self.kind}'.")
        for pattern, repeats in self.segments:
            if repeats < 0 or not pattern:
                raise ValidationError("Scheme segments need a nonempty pattern and repeats >= 0.")
            for povm in pattern:
                if povm.dim != self.dim:
                    raise DimensionError(f"POVM of dim {povm.dim} in a d={self.dim} scheme.")

    @classmethod
    def fixed(cls, povms: Sequence[Povm]) -> 'MeasurementScheme':
        povms = tuple(povms)
        if not povms:
            return cls('fixed', 0, ())
        return cls('fixed', povms[0].dim, ((povms, 1),))

    @classmethod
    def repeated(cls, povm: Povm, copies: int) -> 'MeasurementScheme':
        return cls('fixed', povm.dim, (((povm,), int(copies)),))

    @classmethod
    def from_segments(cls, segments: Sequence[Segment]) -> 'MeasurementScheme':
        segments = tuple((tuple(p), int(r)) for p, r in segments)
        dim = segments[0][0][0].dim if segments else 0
        return cls('fixed', dim, segments)

    @classmethod
    def randomized(cls, plan: Callable[[int], 'MeasurementScheme'], copies: int, dim: int):
        return cls('randomized', dim, (), plan, int(copies))

    @property
    def n_copies(self) -> int:
        if self.kind == 'randomized':
            return self.planned_copies
        return sum(len(pattern) * repeats for pattern, repeats in self.segments)

    def instantiate(self, seed: int | None = None) -> 'MeasurementScheme':
        if self.kind == 'fixed':
            return self
        if seed is None:
            raise ValidationError("A randomized scheme needs its seed to be instantiated.")
        scheme = self.plan(seed)
        if scheme.kind != 'fixed' or scheme.n_copies != self.planned_copies:
            raise ValidationError("Plan did not return a fixed scheme of the planned size.")
        return scheme

    def povm_at(self, i: int, seed: int | None = None) -> Povm:
        """POVM applied to copy ``i`` (0-based)."""
        scheme = self.instantiate(seed)
        offset = i
        for pattern, repeats in scheme.segments:
            length = len(pattern) * repeats
            if offset < length:
                return pattern[offset % len(pattern)]
            offset -= length
        raise IndexError(f"Copy index {i} beyond scheme of {scheme.n_copies} copies.")

    def expand(self, seed: int | None = None) -> list[Povm]:
        scheme = self.instantiate(seed)
        povms = []
        for pattern, repeats in scheme.segments:
            povms.extend(list(pattern) * repeats)
        return povms

    def weighted_povms(self) -> list[tuple[Povm, int]]:
        """Distinct POVM slots with their copy counts (fixed schemes)."""
        return [
            (povm, repeats)
            for pattern, repeats in self.instantiate().segments
            for povm in pattern
            if repeats > 0
        ]


# --- Copy oracle ---

class CopyOracle:
    """
    Budgeted single-copy access to a hidden state.

    Each copy is measured exactly once, with the POVM supplied for it.
    """

    def __init__(self, rho, budget: int, rng: np.random.Generator):
        if budget < 0:
            raise ValidationError(f"Budget must be nonnegative, got {budget}.")
        self._rho = as_density(rho)
        self._rng = rng
        self.initial_budget = int(budget)
        self._remaining = int(budget)
        self._consumed = 0

    @property
    def dim(self) -> int:
        return self._rho.dim

    @property
    def remaining(self) -> int:
        return self._remaining

    @property
    def consumed(self) -> int:
        return self._consumed

    def _spend(self, count: int):
        if count > self._remaining:
            raise BudgetExhaustedError(
                f"Requested {count} copies but only {self._remaining} remain."
            )
        self._remaining -= count
        self._consumed += count

    def measure(self, povm: Povm) -> int:
        return int(self.measure_many(povm, 1)[0])

    def measure_many(self, povm: Povm, count: int) -> np.ndarray:
        """Measures ``count`` fresh copies with the same POVM; labels are 1..k."""
        self._spend(int(count))
        probs = born_distribution(self._rho, povm).probs
        return self._rng.choice(povm.k, size=int(count), p=probs) + 1

    def measure_scheme(self, scheme: MeasurementScheme, seed: int | None = None) -> np.ndarray:
        """Measures copy i with the scheme's i-th POVM; the scheme is fixed before any access."""
        scheme = scheme.instantiate(seed)
        total = scheme.n_copies
        self._spend(total)
        outcomes = np.empty(total, dtype=np.int64)
        offset = 0
        for pattern, repeats in scheme.segments:
            period = len(pattern)
            for j, povm in enumerate(pattern):
                probs = born_distribution(self._rho, povm).probs
                outcomes[offset + j: offset + period * repeats: period] = (
                    self._rng.choice(povm.k, size=repeats, p=probs) + 1
                )
            offset += period * repeats
        return outcomes

    def take(self, count: int) -> 'CopyOracle':
        """Moves ``count`` copies into a child oracle sharing this RNG stream."""
        self._spend(int(count))
        return CopyOracle(self._rho, int(count), self._rng)


def oracle_measure(oracle: CopyOracle, povm: Povm) -> int:
    return oracle.measure(povm)


# --- Pauli observables ---

PAULI_MATRICES = {
    'I': np.eye(2, dtype=np.complex128),
    'X': np.array([[0, 1], [1, 0]], dtype=np.complex128),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    'Z': np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
PAULI_STACK = np.array([PAULI_MATRICES[c] for c in 'IXYZ'])


def pauli_labels(n_qubits: int, include_identity: bool = False) -> list[str]:
    labels = [''.join(p) for p in itertools.product('IXYZ', repeat=n_qubits)]
    return labels if include_identity else labels[1:]


def pauli_matrix(label: str) -> np.ndarray:
    return functools.reduce(np.kron, [PAULI_MATRICES[c] for c in label])


@dataclass(frozen=True, eq=False)
class PauliSet:
    n_qubits: int
    labels: tuple[str, ...]
    observables: np.ndarray

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits


@functools.lru_cache(maxsize=8)
def pauli_set(n_qubits: int) -> PauliSet:
    """The 4**N - 1 non-identity N-qubit Pauli observables, in 'IXYZ' product order."""
    if n_qubits < 1:
        raise DimensionError(f"Need at least one qubit, got N={n_qubits}.")
    labels = tuple(pauli_labels(n_qubits))
    observables = np.array([pauli_matrix(label) for label in labels])
    observables.setflags(write=False)
    return PauliSet(n_qubits, labels, observables)


def pauli_povm(P) -> Povm:
    """Two-outcome POVM {(I - P)/2, (I + P)/2}; label 2 is the +1 eigenspace."""
    P = as_square(P)
    identity = np.eye(P.shape[0])
    return Povm(np.array([(identity - P) / 2, (identity + P) / 2]))


def n_qubits_for(d: int) -> int:
    if not is_power_of_two(d) or d < 2:
        raise DimensionError(f"Dimension {d} is not 2**N with N >= 1.")
    return int(d).bit_length() - 1


def pauli_probability_vector(rho, paulis: PauliSet | None = None) -> np.ndarray:
    """Entry for P is the probability of the +1 outcome, (1 + Tr[rho P]) / 2."""
    rho = as_density(rho)
    paulis = paulis or pauli_set(n_qubits_for(rho.dim))
    expectations = np.real(np.einsum('pij,ji->p', paulis.observables, rho.matrix))
    return 0.5 * (1.0 + expectations)


def pauli_expand(coefficients, n_qubits: int) -> np.ndarray:
    """
    Sum of c_s * P_s over all 4**N Pauli strings (identity first), built by
    contracting one qubit at a time instead of stacking dense Paulis.
    """
    coeffs = np.asarray(coefficients, dtype=np.complex128)
    if coeffs.size != 4 ** n_qubits:
        raise DimensionError(f"Expected {4 ** n_qubits} coefficients, got {coeffs.size}.")
    T = coeffs.reshape((4,) * n_qubits)
    for _ in range(n_qubits):
        T = np.tensordot(T, PAULI_STACK, axes=([0], [0]))
    rows = tuple(range(0, 2 * n_qubits, 2))
    cols = tuple(range(1, 2 * n_qubits, 2))
    d = 2 ** n_qubits
    return T.transpose(rows + cols).reshape(d, d)


# --- Mutually unbiased bases ---

@dataclass(frozen=True, eq=False)
class MubFamily:
    """d + 1 orthonormal bases; ``bases[l][:, x]`` is |psi_x^l>."""

    dim: int
    bases: np.ndarray
    classes: tuple[tuple[str, ...], ...] = ()

    @property
    def vectors(self) -> np.ndarray:
        """All d(d+1) vectors as rows, basis-major."""
        return np.concatenate([basis.T for basis in self.bases], axis=0)


def _symplectic_product(v: int, w: int, n_qubits: int) -> int:
    mask = (1 << n_qubits) - 1
    xv, zv = v & mask, v >> n_qubits
    xw, zw = w & mask, w >> n_qubits
    return bin((xv & zw) ^ (zv & xw)).count('1') & 1


def _label_of(v: int, n_qubits: int) -> str:
    chars = []
    for q in range(n_qubits):
        x = (v >> q) & 1
        z = (v >> (n_qubits + q)) & 1
        chars.append('IXZY'[x + 2 * z])
    return ''.join(chars)


def _lagrangian_subspaces(n_qubits: int) -> list[frozenset]:
    """All maximal isotropic subspaces (as sets of nonzero vectors)."""
    n_vectors = 4 ** n_qubits
    found = set()

    def extend(span: frozenset, last: int, rank: int):
        if rank == n_qubits:
            found.add(span - {0})
            return
        for g in range(last + 1, n_vectors):
            if g in span:
                continue
            if any(_symplectic_product(g, s, n_qubits) for s in span):
                continue
            extend(span | {s ^ g for s in span}, g, rank + 1)

    extend(frozenset({0}), 0, 0)
    return sorted(found, key=lambda s: sorted(s))


def _xz_key(v: int, n_qubits: int) -> tuple[int, int]:
    mask = (1 << n_qubits) - 1
    return v & mask, v >> n_qubits


@functools.lru_cache(maxsize=4)
def _commuting_partition(n_qubits: int) -> tuple[tuple[int, ...], ...]:
    """Partitions the nonzero symplectic vectors into d + 1 Lagrangian classes."""
    subspaces = _lagrangian_subspaces(n_qubits)
    containing = {}
    for L in subspaces:
        for v in L:
            containing.setdefault(v, []).append(L)
    universe = set(range(1, 4 ** n_qubits))
    target = 2 ** n_qubits + 1

    def search(covered: frozenset, chosen: list):
        if len(chosen) == target:
            return list(chosen)
        v = min(universe - covered)
        for L in containing[v]:
            if covered.isdisjoint(L):
                result = search(covered | L, chosen + [L])
                if result is not None:
                    return result
        return None

    partition = search(frozenset(), [])
    if partition is None:
        raise ValidationError(f"No commuting partition found for N={n_qubits}.")
    classes = [
        tuple(sorted(L, key=lambda v: _xz_key(v, n_qubits))) for L in partition
    ]
    classes.sort(key=lambda cls: [_xz_key(v, n_qubits) for v in cls])
    return tuple(classes)


def _joint_eigenbasis(generators: list[str]) -> np.ndarray:
    # distinct weights make every joint sign pattern a distinct eigenvalue
    H = sum((2.0 ** i) * pauli_matrix(label) for i, label in enumerate(generators))
    _, vectors = np.linalg.eigh(H)
    return vectors


def _independent_generators(cls: tuple[int, ...], n_qubits: int) -> list[int]:
    span, generators = {0}, []
    for v in cls:
        if v not in span:
            generators.append(v)
            span |= {s ^ v for s in span}
        if len(generators) == n_qubits:
            break
    return generators


@functools.lru_cache(maxsize=4)
def build_mub(n_qubits: int) -> MubFamily:
    """
    Maximal MUB for d = 2**N (N in {1, 2, 3}), from a partition of the Pauli
    observables into commuting classes, one joint eigenbasis per class.
    """
    if n_qubits not in (1, 2, 3):
        raise DimensionError(f"MUB construction supports N in {{1, 2, 3}}, got N={n_qubits}.")
    d = 2 ** n_qubits
    classes = _commuting_partition(n_qubits)
    bases, class_labels = [], []
    for cls in classes:
        generators = _independent_generators(cls, n_qubits)
        bases.append(_joint_eigenbasis([_label_of(g, n_qubits) for g in generators]))
        class_labels.append(tuple(_label_of(v, n_qubits) for v in cls))
    bases = np.array(bases)
    family = MubFamily(d, bases, tuple(class_labels))
    _check_mub(family)
    logger.debug(f"Built maximal MUB for d={d} with classes {class_labels}.")
    return family


def _check_mub(family: MubFamily):
    d = family.dim
    for l, basis in enumerate(family.bases):
        if np.linalg.norm(dagger(basis) @ basis - np.eye(d)) > RECONSTRUCTION_TOL:
            raise ValidationError(f"MUB basis {l} is not orthonormal.")
        for m in range(l + 1, len(family.bases)):
            overlaps = np.abs(dagger(basis) @ family.bases[m]) ** 2
            if np.max(np.abs(overlaps - 1.0 / d)) > RECONSTRUCTION_TOL:
                raise ValidationError(f"MUB bases {l} and {m} are not unbiased.")


def mub_povm(family: MubFamily) -> Povm:
    """Single d(d+1)-outcome POVM {|psi_x^l><psi_x^l| / (d+1)}, basis-major labels."""
    vectors = family.vectors
    effects = np.einsum('mi,mj->mij', vectors, np.conj(vectors)) / (family.dim + 1)
    return Povm(effects)


def mub_distribution(rho, family: MubFamily) -> np.ndarray:
    """Joint law over (basis l, outcome x), flattened basis-major."""
    rho = as_density(rho)
    vectors = family.vectors
    probs = np.real(np.einsum('mi,ij,mj->m', np.conj(vectors), rho.matrix, vectors))
    return np.clip(probs, 0.0, None) / (family.dim + 1)


def two_design_check(vectors) -> float:
    """
    Distance of the 2-fold frame potential average from the Haar value:
    ||(1/m) sum (|psi><psi|)^{(x)2} - (I + SWAP)/(d(d+1))||_HS.
    Args:
        vectors: Array of shape (m, d) with unit-norm rows.
    """
    psi = np.asarray(vectors, dtype=np.complex128)
    if psi.ndim != 2:
        raise DimensionError(f"Expected (m, d) vectors, got shape {psi.shape}.")
    m, d = psi.shape
    norms = np.linalg.norm(psi, axis=1)
    if np.max(np.abs(norms - 1.0)) > RECONSTRUCTION_TOL:
        raise ValidationError("two_design_check needs normalized vectors.")
    doubled = np.einsum('mi,mj->mij', psi, psi).reshape(m, d * d)
    average = doubled.T @ np.conj(doubled) / m
    swap = np.zeros((d * d, d * d))
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing='ij')
    swap[(i * d + j).ravel(), (j * d + i).ravel()] = 1.0
    target = (np.eye(d * d) + swap) / (d * (d + 1))
    return float(np.linalg.norm(average - target, 'fro'))


# --- Haar projector POVM ---

def haar_projector_povm(U, k: int) -> Povm:
    """
    Coarse k-outcome measurement: Pi_x projects onto columns r(x-1)+1 .. rx of U,
    with r = d/k.
    """
    U = as_square(U)
    d = U.shape[0]
    if not is_power_of_two(k) or d % k != 0:
        raise DimensionError(f"k={k} must be a power of 2 dividing d={d}.")
    r = d // k
    blocks = U.T.reshape(k, r, d)
    effects = np.einsum('xri,xrj->xij', blocks, np.conj(blocks))
    return Povm(effects)


# --- JSON codecs ---

def _matrix_to_json(M: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(M)]


def _matrix_from_json(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValidationError("Matrix entries must be [re, im] pairs laid out as rows.")
    return arr[..., 0] + 1j * arr[..., 1]


def povm_to_json(povm: Povm) -> dict:
    return {'dim': povm.dim, 'effects': [_matrix_to_json(M) for M in povm.effects]}


def povm_from_json(payload) -> Povm:
    if isinstance(payload, str):
        payload = json.loads(payload)
    effects = [_matrix_from_json(M) for M in payload['effects']]
    povm = validate_povm(effects)
    if povm.dim != int(payload['dim']):
        raise DimensionError(f"Declared dim {payload['dim']} but effects are {povm.dim}x{povm.dim}.")
    return povm


def state_to_json(rho) -> dict:
    rho = as_density(rho)
    return {'dim': rho.dim, 'rho': _matrix_to_json(rho.matrix)}


def state_from_json(payload) -> DensityMatrix:
    if isinstance(payload, str):
        payload = json.loads(payload)
    rho = DensityMatrix(_matrix_from_json(payload['rho']))
    if rho.dim != int(payload['dim']):
        raise DimensionError(f"Declared dim {payload['dim']} but rho is {rho.dim}x{rho.dim}.")
    return rho
