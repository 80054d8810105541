# File: src/certifiers.py
"""
End-to-end certifiers. Each one consumes a CopyOracle holding the unknown
state, knows the reference state rho0 and answers YES (rho = rho0) or NO
(||rho - rho0||_1 > eps).

- ``randomized_k``: one Haar-random k-outcome projector measurement, then the
  l2 identity tester.
- ``randomized_k_boosted``: T independent runs of ``randomized_k`` and a
  threshold vote.
- ``fixed_pauli``: every Pauli observable once per group, product-Bernoulli tester.
- ``fixed_mub_d``: one mutually unbiased basis per group, l2 tester on the
  joint (basis, outcome) law.
- ``fixed_mub_k``: as ``fixed_mub_d`` with k < d outcomes, each group compressed
  through the l-bit simulation protocol.
- ``fixed_canonical``: the repeated computational-basis baseline.
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .classical_testers import (
    SimulationConfig,
    TesterConfig,
    Verdict,
    amplify_vote,
    hoeffding_groups,
    l2_statistic,
    prod_bern_sample_size,
    simulation_outcomes,
    test_identity_l2,
    test_prod_bern_l2,
)
from .config import (
    CONSTANTS_MODES,
    MUB_DELTA,
    RANDOMIZED_DELTA,
    RANDOMIZED_RADIUS_FACTOR,
    SIMULATION_ETA,
    is_power_of_two,
)
from .errors import ConfigError, DimensionError, InsufficientBudgetError, ValidationError
from .haar import sample_haar_unitary
from .states_measurements import (
    CopyOracle,
    MeasurementScheme,
    as_density,
    basis_povm,
    born_distribution,
    build_mub,
    canonical_povm,
    haar_projector_povm,
    mub_distribution,
    n_qubits_for,
    pauli_povm,
    pauli_probability_vector,
    pauli_set,
)

logger = logging.getLogger(__name__)

CERTIFIER_IDS = (
    'randomized_k',
    'randomized_k_boosted',
    'fixed_pauli',
    'fixed_mub_d',
    'fixed_mub_k',
    'fixed_canonical',
)


@dataclass(frozen=True)
class GroupedPlan:
    groups: int
    group_size: int
    targets: tuple[int, ...] = ()
    kept: tuple[int, ...] = ()
    block: int = 1

    def to_dict(self) -> dict:
        return {
            'groups': self.groups,
            'group_size': self.group_size,
            'targets': list(self.targets),
            'kept': list(self.kept),
            'block': self.block,
        }


@dataclass(frozen=True)
class CertResult:
    verdict: Verdict
    copies_consumed: int
    mode: str
    certifier: str
    diagnostics: dict = field(default_factory=dict)
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            'certifier': self.certifier,
            'verdict': self.verdict.value,
            'copies': self.copies_consumed,
            'mode': self.mode,
            'seed': self.seed,
            'diagnostics': self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# --- Budgets ---

def _check_mode(mode: str):
    if mode not in CONSTANTS_MODES:
        raise ConfigError(f"Unknown constants mode '{mode}'. Expected one of {CONSTANTS_MODES}.")


def _randomized_tester(d: int, k: int, eps: float, mode: str, constant: float | None) -> TesterConfig:
    # E||p_rho^U||_2^2 <= 2/k, so sqrt(2/k) bounds the norm on average; 10/sqrt(k) w.h.p.
    b = 10.0 / math.sqrt(k) if mode == 'paper' else math.sqrt(2.0 / k)
    return TesterConfig(RANDOMIZED_RADIUS_FACTOR * eps / d, RANDOMIZED_DELTA, b, mode, constant)


def _mub_tester(d: int, eps: float, mode: str, constant: float | None) -> TesterConfig:
    return TesterConfig(eps / ((d + 1) * math.sqrt(d)), MUB_DELTA, math.sqrt(2.0) / (d + 1), mode, constant)


def _canonical_tester(d: int, eps: float, mode: str, constant: float | None) -> TesterConfig:
    return TesterConfig(eps / (2.0 * math.sqrt(d)), MUB_DELTA, 1.0, mode, constant)


def _mub_copies(d: int, eps: float, mode: str, constant: float | None) -> int:
    # the tester sees about n/2 samples; the group-overflow event needs n > 6(d+1) ln(6(d+1))
    tester = _mub_tester(d, eps, mode, constant).sample_size
    n = max(2 * tester, math.ceil(6 * (d + 1) * math.log(6 * (d + 1))))
    return (d + 1) * math.ceil(n / (d + 1))


def required_copies(
    certifier: str,
    d: int,
    k: int,
    eps: float,
    mode: str = 'calibrated',
    constant: float | None = None,
    groups: int | None = None,
) -> int:
    """
    Copy budget a certifier asks for under a constants mode.
    Args:
        certifier (str): One of CERTIFIER_IDS.
        d (int): Dimension (power of 2).
        k (int): Outcome count for the k-outcome certifiers.
        eps (float): Trace-distance radius.
        mode (str): 'paper' or 'calibrated'.
        constant (float | None): Calibrated leading constant override.
        groups (int | None): Repetitions of the boosted certifier (default from Hoeffding).
    Returns:
        int: Number of copies.
    """
    _check_mode(mode)
    if certifier == 'randomized_k':
        return _randomized_tester(d, k, eps, mode, constant).sample_size
    if certifier == 'randomized_k_boosted':
        return (groups or hoeffding_groups()) * _randomized_tester(d, k, eps, mode, constant).sample_size
    if certifier == 'fixed_pauli':
        D = d * d - 1
        return D * prod_bern_sample_size(D, eps / 2.0, mode, constant)
    if certifier == 'fixed_mub_d':
        return _mub_copies(d, eps, mode, constant)
    if certifier == 'fixed_mub_k':
        block = SimulationConfig(d, int(k).bit_length() - 1, SIMULATION_ETA).players
        return block * _mub_copies(d, eps, mode, constant)
    if certifier == 'fixed_canonical':
        return _canonical_tester(d, eps, mode, constant).sample_size
    raise ConfigError(f"Unknown certifier '{certifier}'. Expected one of {CERTIFIER_IDS}.")


def group_overflow_bound(n: int, d: int) -> float:
    """Chernoff bound (d+1) exp(-n / (6(d+1))) on P(some m_l exceeds n_0)."""
    return (d + 1) * math.exp(-n / (6.0 * (d + 1)))


def _reference(oracle: CopyOracle, rho0):
    rho0 = as_density(rho0)
    if rho0.dim != oracle.dim:
        raise DimensionError(f"Reference has d={rho0.dim}, oracle holds d={oracle.dim}.")
    return rho0


def _require(oracle: CopyOracle, needed: int, certifier: str):
    if oracle.remaining < needed:
        raise InsufficientBudgetError(
            f"{certifier} needs {needed} copies, the oracle has {oracle.remaining}."
        )


# --- Randomized certifiers ---

def certify_randomized_k(
    oracle: CopyOracle,
    rho0,
    eps: float,
    k: int,
    rng: np.random.Generator,
    mode: str = 'calibrated',
    constant: float | None = None,
) -> CertResult:
    """
    Measures every copy with the k-outcome projectors of one Haar unitary and
    tests the outcome law against p_{rho0}^U at l2 radius 0.07 eps / d.
    """
    rho0 = _reference(oracle, rho0)
    d = rho0.dim
    if not is_power_of_two(k) or d % k != 0:
        raise DimensionError(f"k={k} must be a power of 2 dividing d={d}.")
    cfg = _randomized_tester(d, k, eps, mode, constant)
    _require(oracle, cfg.sample_size, 'randomized_k')

    povm = haar_projector_povm(sample_haar_unitary(d, rng), k)
    outcomes = oracle.measure_many(povm, oracle.remaining)
    q = born_distribution(rho0, povm).probs
    result = test_identity_l2(q, outcomes, cfg)
    return CertResult(result.verdict, oracle.consumed, mode, 'randomized_k', result.to_dict())


def certify_randomized_k_boosted(
    oracle: CopyOracle,
    rho0,
    eps: float,
    k: int,
    rng: np.random.Generator,
    groups: int | None = None,
    mode: str = 'calibrated',
    constant: float | None = None,
) -> CertResult:
    """
    T disjoint runs of ``certify_randomized_k``, combined by ``amplify_vote``.
    The last run also takes the copies left over by the even split.
    """
    rho0 = _reference(oracle, rho0)
    groups = groups or hoeffding_groups()
    per_group = oracle.remaining // groups
    _require(oracle, groups * _randomized_tester(rho0.dim, k, eps, mode, constant).sample_size,
             'randomized_k_boosted')
    start = oracle.consumed
    sizes = [per_group] * (groups - 1) + [oracle.remaining - per_group * (groups - 1)]
    verdicts = [
        certify_randomized_k(oracle.take(size), rho0, eps, k, rng, mode, constant).verdict
        for size in sizes
    ]
    no_fraction = sum(v is Verdict.NO for v in verdicts) / groups
    diagnostics = {'groups': groups, 'per_group': per_group, 'last_group': sizes[-1], 'no_fraction': no_fraction}
    return CertResult(amplify_vote(verdicts), oracle.consumed - start, mode, 'randomized_k_boosted', diagnostics)


# --- Fixed certifiers ---

def certify_fixed_pauli(
    oracle: CopyOracle, rho0, eps: float, mode: str = 'calibrated', constant: float | None = None
) -> CertResult:
    """
    L = n // (d^2 - 1) groups, each measuring every Pauli observable on one
    fresh copy; excess copies are left unmeasured.
    """
    rho0 = _reference(oracle, rho0)
    d = rho0.dim
    paulis = pauli_set(n_qubits_for(d))
    D = d * d - 1
    _require(oracle, D * prod_bern_sample_size(D, eps / 2.0, mode, constant), 'fixed_pauli')
    L = oracle.remaining // D
    povms = tuple(pauli_povm(P) for P in paulis.observables)
    scheme = MeasurementScheme.from_segments([(povms, L)])
    # label 2 is the +1 outcome
    bits = (oracle.measure_scheme(scheme).reshape(L, D) - 1).astype(np.int8)
    result = test_prod_bern_l2(pauli_probability_vector(rho0, paulis), bits, eps / 2.0)
    diagnostics = {**result.to_dict(), 'plan': GroupedPlan(L, D).to_dict()}
    return CertResult(result.verdict, oracle.consumed, mode, 'fixed_pauli', diagnostics)


def _mub_scheme(d: int, group_size: int):
    family = build_mub(n_qubits_for(d))
    scheme = MeasurementScheme.from_segments(
        [((basis_povm(basis),), group_size) for basis in family.bases]
    )
    return family, scheme


def _joint_labels(groups: list[np.ndarray], d: int) -> np.ndarray:
    return np.concatenate([l * d + values for l, values in enumerate(groups)]).astype(np.int64)


def _grouped_test(groups: list[np.ndarray], q_joint: np.ndarray, cfg: TesterConfig) -> tuple[Verdict, dict]:
    """
    Deterministic post-processing: sum_l stat_l / m_l^2 estimates
    sum_l ||p_l - q_l||_2^2 = (d+1)^2 ||p - q||_2^2 without subsampling.
    """
    G = len(groups)
    d = q_joint.size // G
    q_groups = q_joint.reshape(G, d) * G
    statistic = 0.0
    for values, q in zip(groups, q_groups):
        if values.size < 2:
            raise InsufficientBudgetError("Every group needs at least two outcomes.")
        counts = np.bincount(values - 1, minlength=d)
        statistic += l2_statistic(counts, q) / values.size ** 2
    threshold = G * G * cfg.eps ** 2 / 2.0
    verdict = Verdict.NO if statistic > threshold else Verdict.YES
    return verdict, {'statistics': [statistic], 'thresholds': [threshold]}


def _subsampled_test(
    groups: list[np.ndarray], q_joint: np.ndarray, cfg: TesterConfig, draws: int, rng: np.random.Generator
) -> tuple[Verdict, dict, tuple[int, ...], tuple[int, ...]]:
    """Keeps the first min(available, m_l) outcomes of group l, m_l multinomial over ``draws``."""
    G = len(groups)
    d = q_joint.size // G
    targets = rng.multinomial(draws, np.full(G, 1.0 / G))
    kept = [values[:min(values.size, int(m))] for values, m in zip(groups, targets)]
    overflow = any(int(m) > values.size for values, m in zip(groups, targets))
    result = test_identity_l2(q_joint, _joint_labels(kept, d), cfg, strict=False)
    diagnostics = {**result.to_dict(), 'overflow': overflow}
    return result.verdict, diagnostics, tuple(int(m) for m in targets), tuple(v.size for v in kept)


def certify_fixed_mub_d(
    oracle: CopyOracle,
    rho0,
    eps: float,
    rng: np.random.Generator,
    mode: str = 'calibrated',
    constant: float | None = None,
    truly_fixed: bool = False,
) -> CertResult:
    """
    d + 1 equal groups, group l measured in MUB basis l; the pooled (basis,
    outcome) samples are tested against the MUB law of rho0 at radius
    eps / ((d+1) sqrt d) with delta = 1/6.
    """
    rho0 = _reference(oracle, rho0)
    d = rho0.dim
    cfg = _mub_tester(d, eps, mode, constant)
    _require(oracle, _mub_copies(d, eps, mode, constant), 'fixed_mub_d')
    n = oracle.remaining
    G = d + 1
    n0 = n // G
    family, scheme = _mub_scheme(d, n0)
    outcomes = oracle.measure_scheme(scheme).reshape(G, n0)
    groups = [row for row in outcomes]
    q_joint = mub_distribution(rho0, family)

    if truly_fixed:
        verdict, diagnostics = _grouped_test(groups, q_joint, cfg)
        plan = GroupedPlan(G, n0, kept=tuple([n0] * G))
    else:
        verdict, diagnostics, targets, kept = _subsampled_test(groups, q_joint, cfg, n // 2, rng)
        plan = GroupedPlan(G, n0, targets, kept)
    diagnostics.update(plan=plan.to_dict(), truly_fixed=truly_fixed)
    return CertResult(verdict, oracle.consumed, mode, 'fixed_mub_d', diagnostics)


def certify_fixed_mub_k(
    oracle: CopyOracle,
    rho0,
    eps: float,
    k: int,
    rng: np.random.Generator,
    mode: str = 'calibrated',
    constant: float | None = None,
    truly_fixed: bool = False,
    eta: float = SIMULATION_ETA,
) -> CertResult:
    """
    As ``certify_fixed_mub_d``, but a player only forwards log2(k) bits: each
    group's outcomes are turned into simulated d-ary samples, one per block of
    M = ``SimulationConfig.players`` copies (attempts times ceil(d / (k - 1))).
    """
    rho0 = _reference(oracle, rho0)
    d = rho0.dim
    if not is_power_of_two(k) or not 2 <= k < d:
        raise ValidationError(f"fixed_mub_k needs a power of 2 with 2 <= k < d, got k={k}, d={d}; use fixed_mub_d.")
    sim = SimulationConfig(d, int(k).bit_length() - 1, eta)
    M = sim.players
    cfg = _mub_tester(d, eps, mode, constant)
    _require(oracle, M * _mub_copies(d, eps, mode, constant), 'fixed_mub_k')
    n = oracle.remaining
    G = d + 1
    blocks = (n // G) // M
    family, scheme = _mub_scheme(d, blocks * M)
    outcomes = oracle.measure_scheme(scheme).reshape(G, blocks * M)
    simulated = [simulation_outcomes(row, sim, rng) for row in outcomes]
    groups = [values[values > 0] for values in simulated]
    q_joint = mub_distribution(rho0, family)

    if truly_fixed:
        verdict, diagnostics = _grouped_test(groups, q_joint, cfg)
        plan = GroupedPlan(G, blocks, kept=tuple(g.size for g in groups), block=M)
    else:
        verdict, diagnostics, targets, kept = _subsampled_test(groups, q_joint, cfg, n // (2 * M), rng)
        plan = GroupedPlan(G, blocks, targets, kept, M)
    diagnostics.update(
        plan=plan.to_dict(),
        truly_fixed=truly_fixed,
        simulated=[int(g.size) for g in groups],
    )
    return CertResult(verdict, oracle.consumed, mode, 'fixed_mub_k', diagnostics)


def certify_fixed_canonical(
    oracle: CopyOracle, rho0, eps: float, mode: str = 'calibrated', constant: float | None = None
) -> CertResult:
    """
    Baseline: every copy measured in the computational basis. The outcome law
    only sees the diagonal of rho, so off-diagonal deviations are invisible.
    """
    rho0 = _reference(oracle, rho0)
    d = rho0.dim
    cfg = _canonical_tester(d, eps, mode, constant)
    _require(oracle, cfg.sample_size, 'fixed_canonical')
    povm = canonical_povm(d)
    outcomes = oracle.measure_scheme(MeasurementScheme.repeated(povm, oracle.remaining))
    result = test_identity_l2(born_distribution(rho0, povm).probs, outcomes, cfg)
    return CertResult(result.verdict, oracle.consumed, mode, 'fixed_canonical', result.to_dict())


def certify(
    certifier: str,
    oracle: CopyOracle,
    rho0,
    eps: float,
    k: int,
    rng: np.random.Generator,
    mode: str = 'calibrated',
    constant: float | None = None,
    groups: int | None = None,
    truly_fixed: bool = False,
    seed: int | None = None,
) -> CertResult:
    """Dispatches to the named certifier and stamps the seed on the result."""
    _check_mode(mode)
    if certifier == 'randomized_k':
        result = certify_randomized_k(oracle, rho0, eps, k, rng, mode, constant)
    elif certifier == 'randomized_k_boosted':
        result = certify_randomized_k_boosted(oracle, rho0, eps, k, rng, groups, mode, constant)
    elif certifier == 'fixed_pauli':
        result = certify_fixed_pauli(oracle, rho0, eps, mode, constant)
    elif certifier == 'fixed_mub_d':
        result = certify_fixed_mub_d(oracle, rho0, eps, rng, mode, constant, truly_fixed)
    elif certifier == 'fixed_mub_k':
        result = certify_fixed_mub_k(oracle, rho0, eps, k, rng, mode, constant, truly_fixed)
    elif certifier == 'fixed_canonical':
        result = certify_fixed_canonical(oracle, rho0, eps, mode, constant)
    else:
        raise ConfigError(f"Unknown certifier '{certifier}'. Expected one of {CERTIFIER_IDS}.")
    logger.debug(f"{certifier}: {result.verdict.value} after {result.copies_consumed} copies.")
    return replace(result, seed=seed)
