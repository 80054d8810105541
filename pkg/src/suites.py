# File: src/suites.py
"""
Invariant suites behind the ``verify`` command.

Each suite is a list of named checks; a check that raises counts as failed
under its own name, so a broken invariant is always reported by name.
"""

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from .certifiers import CERTIFIER_IDS
from .chi_square_lab import (
    divergences,
    decoupled_bound_check,
    enumerate_outcome_law,
    mic_kernel,
    mic_kernel_born,
    pollard_check,
)
from .classical_testers import (
    SimulationConfig,
    TesterConfig,
    empirical_simulation,
    prod_bern_rejection_rate,
    prod_bern_sample_size,
    rejection_rate,
    simulation_law_exact,
)
from .config import (
    DEFAULT_C,
    DOMAIN_DISTANCE_GUARANTEE,
    DOMAIN_NORM_GUARANTEE,
    KAPPA_1,
)
from .errors import CertLabError, ConfigError
from .experiments import ExperimentConfig, estimate_success
from .haar import (
    domain_compression_check,
    first_moment_check,
    fourth_moment_bound_check,
    projector_second_moment_check,
)
from .hard_instances import (
    enumerate_perturbations,
    hard_instance_batch_check,
    opnorm_concentration_experiment,
    pauli_basis,
)
from .hermitian_core import random_hermitian, schatten_norm
from .mic import mic_apply, mic_matrix, mic_norms, mic_property_report
from .states_measurements import (
    MeasurementScheme,
    build_mub,
    canonical_povm,
    make_standard_states,
    mub_distribution,
    pauli_povm,
    pauli_probability_vector,
    pauli_set,
    random_povm,
    two_design_check,
)

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    value: float
    bound: float
    passed: bool
    detail: str = ''

    def to_dict(self) -> dict:
        return {'name': self.name, 'value': self.value, 'bound': self.bound, 'passed': self.passed, 'detail': self.detail}


@dataclass
class SuiteReport:
    suites: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for checks in self.suites.values() for check in checks)

    def failures(self) -> list[str]:
        return [
            f"{suite}.{check.name}"
            for suite, checks in self.suites.items()
            for check in checks
            if not check.passed
        ]

    def to_dict(self) -> dict:
        return {
            'passed': self.passed,
            'failures': self.failures(),
            'suites': {name: [c.to_dict() for c in checks] for name, checks in self.suites.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class _Checks:
    """Collects checks; ``run`` turns an exception into a failed check of that name."""

    def __init__(self):
        self.results: list[CheckResult] = []

    def add(self, name: str, value: float, bound: float, passed: bool, detail: str = ''):
        self.results.append(CheckResult(name, float(value), float(bound), bool(passed), detail))

    def at_most(self, name: str, value: float, bound: float):
        self.add(name, value, bound, value <= bound)

    def at_least(self, name: str, value: float, bound: float):
        self.add(name, value, bound, value >= bound)

    def run(self, name: str, func):
        try:
            func()
        except CertLabError as e:
            self.add(name, math.nan, math.nan, False, f"{type(e).__name__}: {e}")


# --- Suites ---

def _mic_suite(rng, scale):
    checks = _Checks()
    grid = [(d, k) for d in (2, 4, 8, 16) for k in range(2, min(d, 8) + 1)]
    count = max(len(grid), int(200 * scale))
    # first violation per invariant, else the last measured value
    summary = {}
    for i in range(count):
        d, k = grid[i % len(grid)]
        report = mic_property_report(random_povm(d, k, rng), probes=5, rng=rng)
        for name, (value, bound, ok) in report.checks.items():
            if name not in summary or summary[name][2]:
                summary[name] = (value, bound, ok)
    for name, (value, bound, ok) in summary.items():
        checks.add(name, value, bound, ok)

    def closed_norms():
        for label, povm, expected in (
            ('canonical_d4', canonical_povm(4), (4.0, 2.0, 1.0)),
            ('pauli_z', pauli_povm(pauli_set(1).observables[2]), (2.0, math.sqrt(2.0), 1.0)),
        ):
            norms = mic_norms(mic_matrix(povm))
            gap = max(abs(a - b) for a, b in zip((norms.trace, norms.hs, norms.op), expected))
            checks.at_most(f"closed_norms_{label}", gap, 1e-9)

    checks.run('closed_norms', closed_norms)
    return checks.results


def _chi_square_suite(rng, scale):
    checks = _Checks()
    instances = enumerate_perturbations(pauli_basis(2), 2, 0.3, 1.0)

    def identities():
        pollard_gap, bound_gap, kernel_gap, chain_gap = 0.0, -math.inf, 0.0, -math.inf
        for n in range(1, 5):
            for k in (2, 3):
                povms = [random_povm(2, k, rng) for _ in range(n)]
                scheme = MeasurementScheme.fixed(povms)
                report = pollard_check(scheme, instances)
                scale_ = max(abs(report.chi_square), abs(report.pollard_rhs), 1e-300)
                pollard_gap = max(pollard_gap, abs(report.chi_square - report.pollard_rhs) / scale_)
                bound = decoupled_bound_check(scheme, instances)
                bound_gap = max(bound_gap, bound.chi_square - bound.decoupled_bound)
                sigma, sigma_prime = (make_standard_states(2, 'random', rng) for _ in range(2))
                kernel_gap = max(kernel_gap, abs(
                    mic_kernel(sigma, sigma_prime, povms[0]) - mic_kernel_born(sigma, sigma_prime, povms[0])
                ))
                null = enumerate_outcome_law(scheme, make_standard_states(2, 'mixed'))
                law = enumerate_outcome_law(scheme, sigma)
                div = divergences(law, null)
                chain_gap = max(chain_gap, 2 * div.tv ** 2 - div.kl, div.kl - div.chi_square)
        checks.at_most('pollard_relative_error', pollard_gap, 1e-9)
        checks.at_most('decoupled_bound_excess', bound_gap, 1e-9)
        checks.at_most('kernel_dual_formula', kernel_gap, 1e-10)
        checks.at_most('pinsker_chain_excess', chain_gap, 1e-12)

    checks.run('identities', identities)
    return checks.results


def _fooling_suite(rng, scale):
    checks = _Checks()

    def fooling():
        d = 4
        scheme = MeasurementScheme.repeated(canonical_povm(d), 3)
        plus, mixed = make_standard_states(d, 'plus'), make_standard_states(d, 'mixed')
        tv = divergences(enumerate_outcome_law(scheme, plus), enumerate_outcome_law(scheme, mixed)).tv
        checks.at_most('law_tv', tv, 1e-14)
        image = mic_apply(mic_matrix(canonical_povm(d)), plus.matrix - mixed.matrix)
        checks.at_most('mic_kills_deviation', float(np.linalg.norm(image)), 1e-12)

    checks.run('fooling', fooling)
    return checks.results


def _pauli_suite(rng, scale):
    checks = _Checks()

    def identity():
        worst = 0.0
        for N in (1, 2, 3):
            d = 2 ** N
            for _ in range(max(1, int(100 * scale))):
                rho, sigma = (make_standard_states(d, 'random', rng) for _ in range(2))
                left = np.linalg.norm(pauli_probability_vector(rho) - pauli_probability_vector(sigma))
                right = math.sqrt(d) / 2 * schatten_norm(rho.matrix - sigma.matrix, 2)
                worst = max(worst, abs(left - right))
        checks.at_most('l2_identity', worst, 1e-10)

    checks.run('l2_identity', identity)
    return checks.results


def _mub_suite(rng, scale):
    checks = _Checks()

    def mub():
        norm_excess, distance_gap, design = -math.inf, 0.0, 0.0
        for N in (1, 2, 3):
            family = build_mub(N)
            d = family.dim
            design = max(design, two_design_check(family.vectors))
            for _ in range(20):
                rho, sigma = (make_standard_states(d, 'random', rng) for _ in range(2))
                p, q = mub_distribution(rho, family), mub_distribution(sigma, family)
                norm_excess = max(norm_excess, np.linalg.norm(p) - math.sqrt(2.0) / (d + 1))
                expected = schatten_norm(rho.matrix - sigma.matrix, 2) / (d + 1)
                distance_gap = max(distance_gap, abs(np.linalg.norm(p - q) - expected))
        checks.at_most('two_design_residual', design, 1e-9)
        checks.at_most('norm_bound_excess', norm_excess, 1e-9)
        checks.at_most('distance_identity', distance_gap, 1e-9)

    checks.run('mub', mub)
    return checks.results


def _haar_suite(rng, scale):
    checks = _Checks()
    samples = max(1000, int(20_000 * scale))

    def moments():
        for d in (4, 8):
            A, B = random_hermitian(d, rng), random_hermitian(d, rng)
            first = first_moment_check(A, B, samples, rng)
            checks.add(f"first_moment_d{d}", first.z_score, 4.0, first.passed)
            rho = make_standard_states(d, 'random', rng)
            second = projector_second_moment_check(rho.matrix, 2, samples, rng)
            checks.add(f"projector_second_moment_d{d}", second.z_score, 4.0, second.passed)
        delta = make_standard_states(8, 'plus').matrix - np.eye(8) / 8
        for k in (2, 4):
            single, cross = fourth_moment_bound_check(delta, 8, k, samples, rng)
            checks.add(f"fourth_moment_single_k{k}", single.estimate, single.oracle, single.within_bound)
            checks.add(f"fourth_moment_cross_k{k}", cross.estimate, cross.oracle, cross.within_bound)

    checks.run('moments', moments)
    return checks.results


def _domain_suite(rng, scale):
    checks = _Checks()
    samples = max(200, int(2000 * scale))

    def domain():
        d = 8
        rho, sigma = make_standard_states(d, 'plus'), make_standard_states(d, 'mixed')
        for k in (2, 4, 8):
            report = domain_compression_check(rho, sigma, k, samples, rng)
            se_norm, se_distance = report.standard_errors()
            checks.at_least(f"norm_fraction_k{k}", report.fraction_norm, DOMAIN_NORM_GUARANTEE - 3 * se_norm)
            checks.at_least(
                f"distance_fraction_k{k}", report.fraction_distance, DOMAIN_DISTANCE_GUARANTEE - 3 * se_distance
            )

    checks.run('domain', domain)
    return checks.results


def _opnorm_suite(rng, scale):
    checks = _Checks()
    trials = max(50, int(500 * scale))

    def concentration():
        for d in (16, 32, 64):
            report = opnorm_concentration_experiment(d, d * d // 2, 'pauli', trials, rng, KAPPA_1)
            checks.at_most(f"tail_fraction_d{d}", report.tail_fraction, 0.0)

    checks.run('concentration', concentration)
    return checks.results


def _hard_suite(rng, scale):
    checks = _Checks()
    draws = max(500, int(10_000 * scale))

    def validity():
        report = hard_instance_batch_check(8, 0.004, DEFAULT_C, 32, draws, 'pauli', rng)
        checks.at_least('valid_states', report.valid_states, report.draws)
        checks.add('far_fraction', report.far_fraction, 0.5, report.far_fraction > 0.5)

    checks.run('validity', validity)
    return checks.results


def _simulation_suite(rng, scale):
    checks = _Checks()

    def simulation():
        cfg = SimulationConfig(5, 2)
        p = np.array([0.4, 0.3, 0.1, 0.1, 0.1])
        law, success = simulation_law_exact(p, cfg)
        checks.at_most('conditional_law', float(np.max(np.abs(law - p))), 1e-12)
        checks.at_most('attempt_success', abs(success - 1.0 / cfg.parts), 1e-12)
        report = empirical_simulation(p, cfg, max(1000, int(100_000 * scale)), rng)
        checks.at_most('bottom_rate', report.bottom_rate, cfg.eta)

    checks.run('simulation', simulation)
    return checks.results


def _tester_suite(rng, scale):
    checks = _Checks()
    runs = max(100, int(1000 * scale))

    def calibration():
        k, eps, delta = 16, 0.1, 0.1
        q = np.full(k, 1.0 / k)
        far = q + 2 * eps / math.sqrt(k) * np.tile([1.0, -1.0], k // 2)
        cfg = TesterConfig(eps, delta, float(np.linalg.norm(q)))
        checks.at_most('identity_type_1', rejection_rate(q, q, cfg, runs, rng), delta)
        checks.at_most('identity_type_2', 1.0 - rejection_rate(q, far, cfg, runs, rng), delta)

        D, eps_b = 15, 0.2
        qb = np.full(D, 0.5)
        pb = qb + 2 * eps_b / math.sqrt(D) * np.where(np.arange(D) % 2 == 0, 1.0, -1.0)
        n = prod_bern_sample_size(D, eps_b)
        checks.at_most('prod_bern_type_1', prod_bern_rejection_rate(qb, qb, eps_b, n, runs, rng), delta)
        checks.at_most('prod_bern_type_2', 1.0 - prod_bern_rejection_rate(qb, pb, eps_b, n, runs, rng), delta)

    checks.run('calibration', calibration)
    return checks.results


def _certifier_suite(rng, scale):
    checks = _Checks()
    trials = max(30, int(200 * scale))
    seed = int(rng.integers(2 ** 31))

    def end_to_end():
        for certifier in CERTIFIER_IDS:
            if certifier == 'fixed_canonical':
                continue
            k = 2 if certifier == 'fixed_mub_k' else 4
            for instance in ('null', 'plus'):
                config = ExperimentConfig(certifier, 4, k, 1.0, instance=instance, trials=trials, seed=seed)
                record = estimate_success(config, timing=False)
                checks.at_least(f"{certifier}_{instance}", record.interval[0], 0.6)

    checks.run('end_to_end', end_to_end)
    return checks.results


def _scaling_suite(rng, scale):
    checks = _Checks()
    trials = max(20, int(100 * scale))
    factors = (1, 2, 4, 8) if scale >= 0.5 else (1, 2)
    seed = int(rng.integers(2 ** 31))

    def monotone(name, records):
        previous = None
        for label, record in records:
            rate, se = record.rate, math.sqrt(max(record.rate * (1 - record.rate), 0.0) / record.graded)
            if previous is not None:
                floor = previous[0] - 2 * max(se, previous[1])
                checks.add(f"{name}_{label}", rate, floor, rate >= floor)
            previous = (rate, se)

    def scaling():
        base = ExperimentConfig('randomized_k', 4, 4, 1.0, instance='plus', trials=trials, seed=seed)
        monotone('monotone_n', [
            (f"x{factor}", estimate_success(
                ExperimentConfig.from_dict({**base.to_dict(), 'n': factor * base.budget}), timing=False))
            for factor in factors
        ])

        ks = [2 ** i for i in range(1, base.d.bit_length())]
        grid = [ExperimentConfig.from_dict({**base.to_dict(), 'k': k}) for k in ks]
        n = max(config.budget for config in grid)
        monotone('monotone_k', [
            (f"k{config.k}", estimate_success(ExperimentConfig.from_dict({**config.to_dict(), 'n': n}), timing=False))
            for config in grid
        ])

        coin = ExperimentConfig('fixed_canonical', 4, 4, 1.0, instance='coin', trials=trials, seed=seed)
        for factor in factors:
            config = ExperimentConfig.from_dict({**coin.to_dict(), 'n': factor * coin.budget})
            record = estimate_success(config, timing=False)
            band = 4.0 * math.sqrt(0.25 / record.graded)
            checks.add(f"canonical_coin_flip_x{factor}", abs(record.rate - 0.5), band,
                       abs(record.rate - 0.5) <= band)

    checks.run('scaling', scaling)
    return checks.results


SUITES = {
    'mic': _mic_suite,
    'chi_square': _chi_square_suite,
    'fooling': _fooling_suite,
    'pauli': _pauli_suite,
    'mub': _mub_suite,
    'haar': _haar_suite,
    'domain': _domain_suite,
    'opnorm': _opnorm_suite,
    'hard': _hard_suite,
    'simulation': _simulation_suite,
    'testers': _tester_suite,
    'certifiers': _certifier_suite,
    'scaling': _scaling_suite,
}


def verify_suites(selector: str = 'all', seed: int = 0, scale: float = 1.0, progress: bool = False) -> SuiteReport:
    """
    Runs the named suites ('all' or a comma-separated list).
    Args:
        selector (str): Suite names from SUITES, or 'all'.
        seed (int): Master seed; suite i gets its own spawned stream.
        scale (float): Multiplier on sample and trial counts (1.0 = full size).
        progress (bool): Show a progress bar over suites.
    Returns:
        SuiteReport: Every check with its value and bound.
    """
    names = list(SUITES) if selector == 'all' else [s.strip() for s in selector.split(',') if s.strip()]
    unknown = [name for name in names if name not in SUITES]
    if unknown or not names:
        raise ConfigError(f"Unknown suites {unknown}. Available: {list(SUITES)} or 'all'.")
    streams = np.random.SeedSequence(int(seed)).spawn(len(SUITES))
    report = SuiteReport()
    for name in tqdm(names, desc='suites', disable=not progress):
        logger.info(f"--- Running suite '{name}' ---")
        rng = np.random.default_rng(streams[list(SUITES).index(name)])
        report.suites[name] = SUITES[name](rng, scale)
        failed = [c.name for c in report.suites[name] if not c.passed]
        if failed:
            logger.warning(f"Suite '{name}' failed checks: {failed}")
    return report
