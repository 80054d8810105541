# File: tests/test_experiments.py

import json

import pandas as pd
import pytest

from src.config import CSV_COLUMNS
from src.errors import ConfigError
from src.experiments import (
    ExperimentConfig,
    estimate_success,
    expand_grid,
    run_trial,
    sweep,
    write_table,
)
from src.states_measurements import make_standard_states, state_to_json


def canonical(**overrides) -> ExperimentConfig:
    payload = {'certifier': 'fixed_canonical', 'd': 4, 'k': 4, 'eps': 1.0, 'trials': 40, 'seed': 1}
    payload.update(overrides)
    return ExperimentConfig.from_dict(payload)


class TestConfig:
    def test_auto_budget(self):
        assert canonical().budget == 287
        assert canonical(n=500).budget == 500

    @pytest.mark.parametrize("overrides", [
        {'d': 3},
        {'certifier': 'tomography'},
        {'eps': 3.0},
        {'trials': 0},
        {'mode': 'fast'},
        {'instance': 'ghz'},
        {'instance': 'file'},
        {'n': 0},
        {'colour': 'red'},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            canonical(**overrides)

    def test_incomplete(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({'certifier': 'fixed_canonical', 'd': 4})

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / 'cell.json'
        path.write_text(json.dumps(canonical(instance='plus').to_dict()))
        assert ExperimentConfig.from_json(str(path)) == canonical(instance='plus')


class TestRunTrial:
    def test_deterministic(self):
        a, b = run_trial(canonical(instance='coin'), 99), run_trial(canonical(instance='coin'), 99)
        assert a.to_json() == b.to_json()
        assert a.seed == 99

    def test_expected_verdict_recorded(self):
        assert run_trial(canonical(), 1).diagnostics['expected'] == 'YES'
        assert run_trial(canonical(instance='plus'), 1).diagnostics['expected'] == 'NO'

    def test_file_instance(self, tmp_path):
        path = tmp_path / 'state.json'
        path.write_text(json.dumps(state_to_json(make_standard_states(4, 'basis', index=2))))
        result = run_trial(canonical(instance='file', state_file=str(path)), 3)
        assert result.diagnostics['expected'] == 'NO'
        assert result.verdict.value == 'NO'

    def test_hard_instance_runs(self):
        config = ExperimentConfig('fixed_mub_d', 4, 4, 0.5, instance='hard', trials=1, c=1.0)
        result = run_trial(config, 5)
        assert result.copies_consumed == config.budget


class TestEstimateSuccess:
    def test_null_and_plus(self):
        null = estimate_success(canonical(), timing=False)
        assert null.successes == null.graded == 40
        assert null.interval[1] == pytest.approx(1.0)
        plus = estimate_success(canonical(instance='plus'), timing=False)
        assert plus.successes == 0

    def test_coin_flip_baseline(self):
        record = estimate_success(canonical(instance='coin', trials=200), timing=False)
        assert 0.35 <= record.rate <= 0.65
        assert record.interval[0] < record.rate < record.interval[1]

    def test_row_schema(self):
        row = estimate_success(canonical(trials=5), timing=False).to_row()
        assert list(row) == CSV_COLUMNS
        assert row['wall_ms'] == 0.0
        assert row['n'] == 287

    @pytest.mark.slow
    def test_workers_do_not_change_result(self):
        one = estimate_success(canonical(instance='coin'), workers=1, timing=False)
        two = estimate_success(canonical(instance='coin'), workers=2, timing=False)
        assert one.to_dict() == two.to_dict()


class TestSweep:
    def test_grid(self):
        grid = expand_grid(canonical(), {'n': [300, 600], 'eps': [0.5, 1.0]})
        assert len(grid) == 4
        assert {(c.n, c.eps) for c in grid} == {(300, 0.5), (300, 1.0), (600, 0.5), (600, 1.0)}

    def test_failing_cell_is_recorded(self):
        table = sweep([canonical(trials=5), canonical(n=10, trials=5)], timing=False)
        assert list(table.columns) == CSV_COLUMNS
        assert len(table) == 2
        assert list(table.attrs['errors']) == [1]
        assert pd.isna(table.loc[1, 'rate'])
        assert table.loc[0, 'successes'] == 5

    def test_reproducible_bytes(self):
        grid = expand_grid(canonical(trials=10), {'instance': ['null', 'coin']})
        assert sweep(grid, timing=False).to_csv(index=False) == sweep(grid, timing=False).to_csv(index=False)

    def test_cells_are_order_independent(self):
        grid = expand_grid(canonical(trials=8), {'instance': ['null', 'plus', 'coin']})
        forward = sweep(grid, timing=False)
        backward = sweep(grid[::-1], timing=False).iloc[::-1].reset_index(drop=True)
        pd.testing.assert_frame_equal(forward, backward)

    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            sweep([])

    def test_write_table(self, tmp_path):
        path = tmp_path / 'results' / 'sweep.csv'
        write_table(sweep([canonical(trials=3)], timing=False), str(path))
        assert pd.read_csv(path).columns.tolist() == CSV_COLUMNS
