# File: tests/test_certifiers.py

import json

import numpy as np
import pytest

from src.certifiers import (
    CERTIFIER_IDS,
    certify,
    certify_fixed_canonical,
    certify_fixed_mub_d,
    certify_fixed_mub_k,
    certify_fixed_pauli,
    certify_randomized_k,
    certify_randomized_k_boosted,
    group_overflow_bound,
    required_copies,
)
from src.classical_testers import Verdict, hoeffding_groups
from src.errors import ConfigError, DimensionError, InsufficientBudgetError, ValidationError
from src.states_measurements import CopyOracle, make_standard_states

D, EPS = 4, 1.0


def oracle_for(which: str, budget: int, seed: int = 11) -> CopyOracle:
    return CopyOracle(make_standard_states(D, which), budget, np.random.default_rng(seed))


@pytest.fixture
def rho0():
    return make_standard_states(D, 'mixed')


class TestBudgets:
    def test_closed_values(self):
        assert required_copies('fixed_canonical', D, D, EPS) == 287
        assert required_copies('fixed_mub_d', D, D, EPS) == 1015
        assert required_copies('fixed_pauli', D, D, EPS) == 15 * 155

    def test_relations(self):
        single = required_copies('randomized_k', D, D, EPS)
        assert required_copies('randomized_k_boosted', D, D, EPS) == hoeffding_groups() * single
        assert required_copies('randomized_k_boosted', D, D, EPS, groups=3) == 3 * single
        assert required_copies('fixed_mub_k', D, 2, EPS) == 800 * required_copies('fixed_mub_d', D, D, EPS)
        assert required_copies('randomized_k', D, D, EPS, mode='paper') > single

    def test_mub_budget_covers_overflow(self):
        n = required_copies('fixed_mub_d', D, D, EPS)
        assert n % (D + 1) == 0
        assert group_overflow_bound(n, D) < 1e-10

    def test_unknown(self):
        with pytest.raises(ConfigError):
            required_copies('tomography', D, D, EPS)
        with pytest.raises(ConfigError):
            required_copies('fixed_mub_d', D, D, EPS, mode='fast')


class TestRandomized:
    @pytest.mark.parametrize("which, expected", [('mixed', Verdict.YES), ('plus', Verdict.NO)])
    def test_verdicts(self, rho0, which, expected):
        n = required_copies('randomized_k', D, D, EPS)
        oracle = oracle_for(which, n)
        result = certify_randomized_k(oracle, rho0, EPS, D, np.random.default_rng(3))
        assert result.verdict is expected
        assert result.copies_consumed == n
        assert oracle.remaining == 0

    def test_k_must_divide_d(self, rho0):
        with pytest.raises(DimensionError):
            certify_randomized_k(oracle_for('mixed', 10 ** 6), rho0, EPS, 3, np.random.default_rng(0))

    def test_budget_checked(self, rho0):
        with pytest.raises(InsufficientBudgetError):
            certify_randomized_k(oracle_for('mixed', 100), rho0, EPS, D, np.random.default_rng(0))

    def test_boosted_vote(self, rho0):
        n = required_copies('randomized_k_boosted', D, D, EPS, groups=3)
        result = certify_randomized_k_boosted(oracle_for('plus', n), rho0, EPS, D, np.random.default_rng(4), groups=3)
        assert result.verdict is Verdict.NO
        assert result.diagnostics['groups'] == 3
        assert result.diagnostics['no_fraction'] == 1.0
        assert result.copies_consumed == n

    def test_boosted_spends_leftover_copies(self, rho0):
        n = required_copies('randomized_k_boosted', D, D, EPS, groups=3) + 5
        oracle = oracle_for('mixed', n)
        result = certify_randomized_k_boosted(oracle, rho0, EPS, D, np.random.default_rng(8), groups=3)
        assert oracle.remaining == 0
        assert result.copies_consumed == n
        assert result.diagnostics['last_group'] == result.diagnostics['per_group'] + n % 3


class TestFixed:
    @pytest.mark.parametrize("which, expected", [('mixed', Verdict.YES), ('plus', Verdict.NO)])
    def test_pauli(self, rho0, which, expected):
        n = required_copies('fixed_pauli', D, D, EPS)
        result = certify_fixed_pauli(oracle_for(which, n), rho0, EPS)
        assert result.verdict is expected
        assert result.diagnostics['plan']['groups'] == 155

    def test_pauli_leaves_excess_unmeasured(self, rho0):
        n = required_copies('fixed_pauli', D, D, EPS) + 7
        oracle = oracle_for('mixed', n)
        certify_fixed_pauli(oracle, rho0, EPS)
        assert oracle.remaining == 7

    @pytest.mark.parametrize("truly_fixed", [False, True])
    @pytest.mark.parametrize("which, expected", [('mixed', Verdict.YES), ('plus', Verdict.NO)])
    def test_mub_d(self, rho0, which, expected, truly_fixed):
        n = 4 * required_copies('fixed_mub_d', D, D, EPS)
        result = certify_fixed_mub_d(oracle_for(which, n), rho0, EPS, np.random.default_rng(5), truly_fixed=truly_fixed)
        assert result.verdict is expected
        plan = result.diagnostics['plan']
        assert plan['groups'] == D + 1 and plan['group_size'] == n // (D + 1)
        assert result.diagnostics['truly_fixed'] is truly_fixed
        if not truly_fixed:
            assert result.diagnostics['overflow'] is False
            assert sum(plan['kept']) == sum(plan['targets'])

    @pytest.mark.slow
    @pytest.mark.parametrize("which, expected", [('mixed', Verdict.YES), ('plus', Verdict.NO)])
    def test_mub_k(self, rho0, which, expected):
        n = 4 * required_copies('fixed_mub_k', D, 2, EPS)
        result = certify_fixed_mub_k(oracle_for(which, n), rho0, EPS, 2, np.random.default_rng(6))
        assert result.verdict is expected
        assert result.diagnostics['plan']['block'] == 800
        assert all(size <= result.diagnostics['plan']['group_size'] for size in result.diagnostics['simulated'])

    def test_mub_k_needs_k_below_d(self, rho0):
        with pytest.raises(ValidationError):
            certify_fixed_mub_k(oracle_for('mixed', 10), rho0, EPS, D, np.random.default_rng(0))

    def test_canonical_is_fooled_by_plus(self, rho0):
        n = required_copies('fixed_canonical', D, D, EPS)
        assert certify_fixed_canonical(oracle_for('plus', n), rho0, EPS).verdict is Verdict.YES
        assert certify_fixed_canonical(oracle_for('basis', n), rho0, EPS).verdict is Verdict.NO


class TestDispatch:
    def test_seed_stamped_and_json(self, rho0):
        n = required_copies('fixed_canonical', D, D, EPS)
        result = certify('fixed_canonical', oracle_for('mixed', n), rho0, EPS, D, np.random.default_rng(0), seed=42)
        payload = json.loads(result.to_json())
        assert payload['seed'] == 42
        assert payload['certifier'] == 'fixed_canonical'
        assert set(payload) == {'certifier', 'verdict', 'copies', 'mode', 'seed', 'diagnostics'}

    @pytest.mark.parametrize("certifier", CERTIFIER_IDS)
    def test_every_certifier_checks_budget(self, rho0, certifier):
        k = 2 if certifier == 'fixed_mub_k' else D
        with pytest.raises(InsufficientBudgetError):
            certify(certifier, oracle_for('mixed', 50), rho0, EPS, k, np.random.default_rng(0), groups=3)

    def test_unknown_id_and_mode(self, rho0):
        with pytest.raises(ConfigError):
            certify('tomography', oracle_for('mixed', 10), rho0, EPS, D, np.random.default_rng(0))
        with pytest.raises(ConfigError):
            certify('fixed_canonical', oracle_for('mixed', 10), rho0, EPS, D, np.random.default_rng(0), mode='fast')

    def test_reference_dimension(self):
        with pytest.raises(DimensionError):
            certify_fixed_canonical(oracle_for('mixed', 1000), make_standard_states(2, 'mixed'), EPS)
