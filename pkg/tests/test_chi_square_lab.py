# File: tests/test_chi_square_lab.py

import math

import numpy as np
import pytest

from src.chi_square_lab import (
    decoupled_bound_check,
    divergences,
    enumerate_outcome_law,
    game_value_demo,
    mic_kernel,
    mic_kernel_born,
    mixture_chi_square,
    pollard_check,
)
from src.errors import AbsoluteContinuityError, EnumerationCapError, ValidationError
from src.hard_instances import adversarial_basis, enumerate_perturbations, pauli_basis
from src.states_measurements import (
    MeasurementScheme,
    basis_povm,
    canonical_povm,
    make_standard_states,
    random_povm,
)

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


class TestOutcomeLaw:
    def test_product_structure(self):
        rho = make_standard_states(4, 'basis', index=1)
        law = enumerate_outcome_law(MeasurementScheme.repeated(canonical_povm(4), 2), rho)
        assert law.outcomes == (4, 4)
        expected = np.zeros(16)
        expected[1 * 4 + 1] = 1.0
        np.testing.assert_allclose(law.probs, expected)

    def test_sums_to_one(self, rng):
        scheme = MeasurementScheme.fixed([random_povm(2, 3, rng) for _ in range(4)])
        law = enumerate_outcome_law(scheme, make_standard_states(2, 'random', rng))
        assert law.size == 81
        assert law.probs.sum() == pytest.approx(1.0)

    def test_cap(self):
        with pytest.raises(EnumerationCapError):
            enumerate_outcome_law(MeasurementScheme.repeated(canonical_povm(4), 10), make_standard_states(4, 'mixed'))

    def test_randomized_rejected(self):
        scheme = MeasurementScheme.randomized(lambda s: MeasurementScheme.repeated(canonical_povm(2), 1), 1, 2)
        with pytest.raises(ValidationError):
            enumerate_outcome_law(scheme, make_standard_states(2, 'mixed'))


class TestDivergences:
    def test_known_values(self):
        div = divergences([1.0, 0.0], [0.5, 0.5])
        assert div.tv == pytest.approx(0.5)
        assert div.kl == pytest.approx(math.log(2.0))
        assert div.chi_square == pytest.approx(1.0)

    def test_identical_laws(self):
        div = divergences([0.2, 0.8], [0.2, 0.8])
        assert (div.tv, div.kl, div.chi_square) == (0.0, 0.0, 0.0)

    def test_absolute_continuity(self):
        with pytest.raises(AbsoluteContinuityError):
            divergences([0.5, 0.5], [1.0, 0.0])


class TestKernels:
    @pytest.mark.parametrize("d, k", [(2, 2), (2, 5), (4, 3)])
    def test_dual_forms_agree(self, rng, d, k):
        povm = random_povm(d, k, rng)
        sigma, sigma_prime = (make_standard_states(d, 'random', rng) for _ in range(2))
        assert mic_kernel(sigma, sigma_prime, povm) == pytest.approx(mic_kernel_born(sigma, sigma_prime, povm))

    def test_kernel_vanishes_at_null(self, rng):
        povm = random_povm(2, 3, rng)
        assert mic_kernel(make_standard_states(2, 'mixed'), make_standard_states(2, 'random', rng), povm) == \
            pytest.approx(0.0, abs=1e-14)


class TestMixtureIdentities:
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_pollard_and_decoupled_bound(self, rng, n):
        instances = enumerate_perturbations(pauli_basis(2), 2, 0.3, 1.0)
        scheme = MeasurementScheme.fixed([random_povm(2, 3, rng) for _ in range(n)])
        pollard = pollard_check(scheme, instances)
        assert pollard.pollard_holds
        bound = decoupled_bound_check(scheme, instances)
        assert bound.bound_holds
        assert bound.chi_square == pytest.approx(pollard.chi_square)

    def test_weights_validated(self):
        states = [(make_standard_states(2, 'mixed'), 0.7)]
        with pytest.raises(ValidationError):
            mixture_chi_square(MeasurementScheme.repeated(canonical_povm(2), 1), states)

    def test_adversarial_mixture_is_invisible(self):
        scheme = MeasurementScheme.repeated(canonical_povm(2), 6)
        instances = enumerate_perturbations(adversarial_basis(scheme), 2, 0.5, 1.0)
        assert mixture_chi_square(scheme, instances) == pytest.approx(0.0, abs=1e-12)


class TestGameValue:
    def test_adversary_beats_fixed_basis(self):
        scheme = MeasurementScheme.repeated(basis_povm(HADAMARD), 8)
        value = game_value_demo(scheme, 0.5, 2, c=1.0)
        assert value.chi_adversarial_basis == pytest.approx(0.0, abs=1e-12)
        assert value.adversarial_fooled
        assert not value.fixed_fooled
        assert value.to_dict()['threshold'] == pytest.approx(2 / 25)
