# File: tests/test_cli.py

import json

import pandas as pd

import app
from src.config import CSV_COLUMNS, EXIT_OK, EXIT_VALIDATION, EXIT_VERDICT_NO
from src.states_measurements import canonical_povm, povm_to_json


class TestCertify:
    def test_fooled_baseline_says_yes(self, capsys):
        code = app.main(['certify', '--certifier', 'fixed_canonical', '--d', '4', '--k', '4',
                         '--eps', '1.0', '--instance', 'plus', '--seed', '3'])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload['verdict'] == 'YES'
        assert payload['seed'] == 3

    def test_no_verdict_exit_code(self, capsys):
        code = app.main(['certify', '--certifier', 'fixed_pauli', '--d', '4', '--k', '4',
                         '--eps', '1.0', '--instance', 'plus', '--seed', '3'])
        assert code == EXIT_VERDICT_NO
        assert json.loads(capsys.readouterr().out)['verdict'] == 'NO'

    def test_config_file_and_budget_error(self, tmp_path):
        path = tmp_path / 'cell.json'
        path.write_text(json.dumps({'certifier': 'fixed_canonical', 'd': 4, 'k': 4, 'eps': 1.0, 'n': 5}))
        assert app.main(['certify', '--config', str(path)]) == EXIT_VALIDATION

    def test_missing_file(self):
        assert app.main(['certify', '--config', 'does/not/exist.json']) == EXIT_VALIDATION

    def test_bad_dimension(self):
        assert app.main(['certify', '--certifier', 'fixed_canonical', '--d', '6', '--k', '2', '--eps', '1.0']) \
            == EXIT_VALIDATION


class TestOtherCommands:
    def test_sweep_to_csv(self, tmp_path):
        config = tmp_path / 'sweep.json'
        config.write_text(json.dumps({
            'base': {'certifier': 'fixed_canonical', 'd': 4, 'k': 4, 'eps': 1.0, 'trials': 5},
            'axes': {'instance': ['null', 'plus']},
        }))
        out = tmp_path / 'out.csv'
        assert app.main(['sweep', '--config', str(config), '--out', str(out), '--no-timing']) == EXIT_OK
        table = pd.read_csv(out)
        assert table.columns.tolist() == CSV_COLUMNS
        assert table['successes'].tolist() == [5, 0]

    def test_mic_cert(self, tmp_path, capsys):
        path = tmp_path / 'povms.json'
        path.write_text(json.dumps([povm_to_json(canonical_povm(4))]))
        assert app.main(['mic-cert', '--povms', str(path), '--eps', '0.5']) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert abs(payload['sup_trace'] - 4.0) < 1e-9
        assert payload['bound_kind'] == 'order-only'

    def test_verify(self, tmp_path):
        out = tmp_path / 'verify.json'
        assert app.main(['verify', '--suite', 'fooling', '--out', str(out)]) == EXIT_OK
        assert json.loads(out.read_text())['passed'] is True

    def test_verify_unknown_suite(self):
        assert app.main(['verify', '--suite', 'nope']) == EXIT_VALIDATION

    def test_simulate(self, capsys):
        assert app.main(['simulate', '--d', '5', '--ell', '2', '--runs', '2000', '--seed', '1']) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload['attempts'] == 200
        assert abs(payload['attempt_success'] - 0.5) < 1e-12

    def test_simulate_rejects_bad_distribution(self):
        assert app.main(['simulate', '--d', '3', '--ell', '2', '--p', '0.5,0.6,-0.1']) == EXIT_VALIDATION
