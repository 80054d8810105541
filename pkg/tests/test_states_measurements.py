# File: tests/test_states_measurements.py

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import (
    BudgetExhaustedError,
    DimensionError,
    InvalidStateError,
    PovmValidationError,
    ValidationError,
)
from src.haar import sample_haar_unitary
from src.states_measurements import (
    CopyOracle,
    DensityMatrix,
    MeasurementScheme,
    Povm,
    basis_povm,
    born_distribution,
    build_mub,
    canonical_povm,
    haar_projector_povm,
    make_standard_states,
    mub_distribution,
    mub_povm,
    n_qubits_for,
    pauli_expand,
    pauli_matrix,
    pauli_povm,
    pauli_probability_vector,
    pauli_set,
    povm_from_json,
    povm_to_json,
    random_povm,
    state_from_json,
    state_to_json,
    trivial_povm,
    two_design_check,
)


class TestStandardStates:
    def test_mixed_and_plus(self):
        assert_allclose(make_standard_states(4, 'mixed').matrix, np.eye(4) / 4)
        plus = make_standard_states(4, 'plus').matrix
        assert_allclose(plus, np.full((4, 4), 0.25))
        assert_allclose(np.linalg.eigvalsh(plus), [0, 0, 0, 1], atol=1e-12)

    def test_basis_forms(self):
        a = make_standard_states(3, 'basis', index=2).matrix
        b = make_standard_states(3, 'basis(2)').matrix
        assert_allclose(a, b)
        assert a[2, 2] == 1.0

    def test_random_is_valid_state(self, rng):
        rho = make_standard_states(4, 'random', rng)
        assert np.trace(rho.matrix).real == pytest.approx(1.0)
        assert np.linalg.eigvalsh(rho.matrix).min() > -1e-10

    @pytest.mark.parametrize("d, which", [(3, 'plus'), (0, 'mixed'), (2, 'basis(5)')])
    def test_bad_dimension(self, d, which):
        with pytest.raises(DimensionError):
            make_standard_states(d, which)

    def test_unknown_name(self):
        with pytest.raises(ValidationError):
            make_standard_states(2, 'ghz')

    def test_invalid_matrices_rejected(self):
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([0.7, 0.7]))
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([1.5, -0.5]))
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_matrix_is_read_only(self):
        rho = make_standard_states(2, 'mixed')
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1.0


class TestPovm:
    def test_invariant_names(self):
        with pytest.raises(PovmValidationError) as info:
            Povm([])
        assert info.value.invariant == 'empty'
        with pytest.raises(PovmValidationError) as info:
            Povm([np.diag([1.0, -0.1]), np.diag([0.0, 1.1])])
        assert info.value.invariant == 'psd'
        with pytest.raises(PovmValidationError) as info:
            Povm([np.diag([0.5, 0.5])])
        assert info.value.invariant == 'completeness'
        with pytest.raises(PovmValidationError) as info:
            Povm([np.eye(2), np.eye(3)])
        assert info.value.invariant == 'shape'

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_random_povm_is_complete(self, rng, k):
        povm = random_povm(3, k, rng)
        assert povm.k == k
        assert_allclose(povm.effects.sum(axis=0), np.eye(3), atol=1e-10)

    def test_born_rule(self):
        rho = make_standard_states(4, 'basis', index=1)
        assert_allclose(born_distribution(rho, canonical_povm(4)).probs, [0, 1, 0, 0])
        assert_allclose(born_distribution(rho, trivial_povm(4)).probs, [1.0])

    def test_born_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            born_distribution(make_standard_states(2, 'mixed'), canonical_povm(4))

    def test_basis_povm_of_haar_unitary(self, rng):
        U = sample_haar_unitary(4, rng)
        povm = basis_povm(U)
        assert_allclose(povm.traces, np.ones(4), atol=1e-10)

    def test_haar_projector_povm_ranks(self, rng):
        U = sample_haar_unitary(8, rng)
        povm = haar_projector_povm(U, 4)
        assert povm.k == 4
        assert_allclose(povm.traces, np.full(4, 2.0), atol=1e-10)
        with pytest.raises(DimensionError):
            haar_projector_povm(U, 3)


class TestSchemes:
    def test_segments_expand_cyclically(self):
        a, b = canonical_povm(2), trivial_povm(2)
        scheme = MeasurementScheme.from_segments([((a, b), 3), ((b,), 2)])
        assert scheme.n_copies == 8
        povms = scheme.expand()
        assert povms[:6] == [a, b] * 3
        assert scheme.povm_at(7) is b
        with pytest.raises(IndexError):
            scheme.povm_at(8)

    def test_randomized_needs_seed(self):
        povm = canonical_povm(2)
        scheme = MeasurementScheme.randomized(lambda s: MeasurementScheme.repeated(povm, 4), 4, 2)
        assert scheme.n_copies == 4
        with pytest.raises(ValidationError):
            scheme.expand()
        assert len(scheme.expand(seed=1)) == 4

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(DimensionError):
            MeasurementScheme.fixed([canonical_povm(2), canonical_povm(4)])


class TestCopyOracle:
    def test_budget_accounting(self, rng):
        oracle = CopyOracle(make_standard_states(2, 'mixed'), 10, rng)
        oracle.measure_many(canonical_povm(2), 6)
        assert oracle.consumed == 6 and oracle.remaining == 4
        with pytest.raises(BudgetExhaustedError):
            oracle.measure_many(canonical_povm(2), 5)
        assert oracle.remaining == 4

    def test_labels_are_one_based(self, rng):
        oracle = CopyOracle(make_standard_states(3, 'basis', index=2), 50, rng)
        assert np.all(oracle.measure_many(canonical_povm(3), 50) == 3)

    def test_scheme_places_outcomes_per_copy(self, rng):
        rho = make_standard_states(2, 'basis', index=0)
        scheme = MeasurementScheme.from_segments([((canonical_povm(2), trivial_povm(2)), 5)])
        outcomes = CopyOracle(rho, 10, rng).measure_scheme(scheme)
        assert np.all(outcomes == 1)

    def test_take_moves_budget(self, rng):
        oracle = CopyOracle(make_standard_states(2, 'mixed'), 10, rng)
        child = oracle.take(4)
        assert child.remaining == 4 and oracle.remaining == 6


class TestPauli:
    def test_set_size_and_order(self):
        paulis = pauli_set(2)
        assert len(paulis.labels) == 15
        assert paulis.labels[0] == 'IX'
        assert 'II' not in paulis.labels

    def test_plus_outcome_is_label_two(self):
        povm = pauli_povm(pauli_matrix('Z'))
        rho = make_standard_states(2, 'basis', index=0)
        assert_allclose(born_distribution(rho, povm).probs, [0.0, 1.0], atol=1e-12)

    def test_probability_vector(self):
        assert_allclose(pauli_probability_vector(make_standard_states(4, 'mixed')), 0.5)
        plus = pauli_probability_vector(make_standard_states(4, 'plus'))
        labels = pauli_set(2).labels
        assert plus[labels.index('XX')] == pytest.approx(1.0)
        assert plus[labels.index('ZI')] == pytest.approx(0.5)

    def test_expand_matches_dense_sum(self, rng):
        coeffs = rng.standard_normal(16)
        labels = pauli_set(2).labels
        dense = coeffs[0] * np.eye(4) + sum(c * pauli_matrix(l) for c, l in zip(coeffs[1:], labels))
        assert_allclose(pauli_expand(coeffs, 2), dense, atol=1e-12)

    def test_n_qubits_for(self):
        assert n_qubits_for(8) == 3
        with pytest.raises(DimensionError):
            n_qubits_for(6)


class TestMub:
    @pytest.mark.parametrize("n_qubits", [1, 2, 3])
    def test_unbiased_and_two_design(self, n_qubits):
        family = build_mub(n_qubits)
        d = 2 ** n_qubits
        assert family.bases.shape == (d + 1, d, d)
        assert two_design_check(family.vectors) < 1e-9

    def test_povm_and_distribution_agree(self):
        family = build_mub(2)
        rho = make_standard_states(4, 'plus')
        assert_allclose(born_distribution(rho, mub_povm(family)).probs, mub_distribution(rho, family), atol=1e-12)

    def test_unsupported_size(self):
        with pytest.raises(DimensionError):
            build_mub(4)


class TestJsonCodecs:
    def test_povm_and_state_survive(self, rng):
        povm = random_povm(2, 3, rng)
        restored = povm_from_json(json.dumps(povm_to_json(povm)))
        assert_allclose(restored.effects, povm.effects)
        rho = make_standard_states(2, 'random', rng)
        assert_allclose(state_from_json(state_to_json(rho)).matrix, rho.matrix)

    def test_declared_dim_checked(self):
        payload = state_to_json(make_standard_states(2, 'mixed'))
        payload['dim'] = 3
        with pytest.raises(DimensionError):
            state_from_json(payload)
