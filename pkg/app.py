# File: app.py
"""
Command-line front end of the certification lab.

    python app.py certify  --config configs/plus_randomized.json --seed 7
    python app.py sweep    --config configs/sweep_n.json --out results/sweep.csv
    python app.py mic-cert --povms povms.json --eps 0.1
    python app.py verify   --suite mic,chi_square
    python app.py simulate --d 5 --ell 2 --runs 100000

Exit codes: 0 success/pass, 1 verdict NO, 2 validation or config error,
3 suite failure.
"""

import argparse
import json
import logging
import sys

import numpy as np

from src.certifiers import CERTIFIER_IDS
from src.classical_testers import SimulationConfig, Verdict, empirical_simulation, simulation_law_exact
from src.config import (
    CONSTANTS_MODES,
    EXIT_OK,
    EXIT_SUITE_FAILURE,
    EXIT_VALIDATION,
    EXIT_VERDICT_NO,
    SIMULATION_ETA,
)
from src.errors import CertLabError, ValidationError
from src.experiments import ExperimentConfig, expand_grid, run_trial, sweep, write_table
from src.mic import lower_bound_certificate
from src.states_measurements import povm_from_json
from src.suites import verify_suites

logger = logging.getLogger('certlab')


def _emit(text: str, out: str | None):
    if out:
        with open(out, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"Output written to {out}")
    else:
        sys.stdout.write(text if text.endswith('\n') else text + '\n')


def _load_json(path: str):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def _experiment_config(args) -> ExperimentConfig:
    payload = _load_json(args.config) if args.config else {}
    for name in ('certifier', 'd', 'k', 'eps', 'n', 'instance', 'trials', 'mode'):
        value = getattr(args, name, None)
        if value is not None:
            payload[name] = value
    if args.seed is not None:
        payload['seed'] = args.seed
    if isinstance(payload.get('n'), str) and payload['n'] != 'auto':
        payload['n'] = int(payload['n'])
    return ExperimentConfig.from_dict(payload)


# --- Subcommands ---

def cmd_certify(args) -> int:
    config = _experiment_config(args)
    result = run_trial(config, config.seed)
    _emit(result.to_json(), args.out)
    return EXIT_VERDICT_NO if result.verdict is Verdict.NO else EXIT_OK


def cmd_sweep(args) -> int:
    payload = _load_json(args.config)
    if isinstance(payload, list):
        grid = [ExperimentConfig.from_dict(cell) for cell in payload]
    else:
        base = dict(payload.get('base', {}))
        if args.seed is not None:
            base['seed'] = args.seed
        if args.mode is not None:
            base['mode'] = args.mode
        grid = expand_grid(base, payload.get('axes', {}))
    table = sweep(grid, workers=args.workers, progress=True, timing=not args.no_timing)
    if args.format == 'json':
        _emit(json.dumps({'rows': table.to_dict(orient='records'), 'errors': table.attrs['errors']},
                         indent=2, default=float), args.out)
    elif args.out:
        write_table(table, args.out)
    else:
        _emit(table.to_csv(index=False), None)
    return EXIT_OK


def cmd_mic_cert(args) -> int:
    payload = _load_json(args.povms)
    povms = [povm_from_json(item) for item in (payload if isinstance(payload, list) else [payload])]
    certificate = lower_bound_certificate(povms, args.eps)
    _emit(json.dumps(certificate.to_dict(), indent=2, sort_keys=True), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_suites(args.suite, seed=args.seed or 0, scale=args.scale, progress=True)
    _emit(report.to_json(), args.out)
    if not report.passed:
        logger.error(f"Suite failures: {report.failures()}")
        return EXIT_SUITE_FAILURE
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = SimulationConfig(args.d, args.ell, args.eta)
    try:
        p = np.full(args.d, 1.0 / args.d) if not args.p else np.array([float(v) for v in args.p.split(',')])
    except ValueError as e:
        raise ValidationError(f"--p must be comma-separated numbers: {e}") from e
    if p.size != args.d or abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
        raise ValidationError(f"--p must be a probability vector of length {args.d}.")
    report = empirical_simulation(p, cfg, args.runs, np.random.default_rng(args.seed or 0), progress=True)
    payload = report.to_dict()
    payload.update(eta=cfg.eta, attempts=cfg.attempts, parts=cfg.parts, bottom_bound=cfg.bottom_probability)
    if args.d ** cfg.parts <= 10 ** 6:
        law, success = simulation_law_exact(p, cfg)
        payload.update(exact_conditional_law=[float(v) for v in law], attempt_success=success)
    _emit(json.dumps(payload, indent=2), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='certlab', description='Quantum state certification lab.')
    parser.add_argument('--log-level', default='INFO', help='Logging level (default INFO).')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p):
        p.add_argument('--seed', type=int, default=None, help='Master seed (u64).')
        p.add_argument('--out', default=None, help='Write output to this path instead of stdout.')
        p.add_argument('--mode', choices=CONSTANTS_MODES, default=None, help='Constants mode.')
        p.add_argument('--format', choices=('csv', 'json'), default='json')
        return p

    p = common(sub.add_parser('certify', help='Run one certification trial.'))
    p.add_argument('--config', default=None, help='Experiment config JSON.')
    p.add_argument('--certifier', choices=CERTIFIER_IDS, default=None)
    p.add_argument('--d', type=int, default=None)
    p.add_argument('--k', type=int, default=None)
    p.add_argument('--eps', type=float, default=None)
    p.add_argument('--n', default=None, help="Copy budget or 'auto'.")
    p.add_argument('--instance', default=None, help='null | plus | hard | coin | file')
    p.set_defaults(func=cmd_certify)

    p = common(sub.add_parser('sweep', help='Estimate success over a grid of configs.'))
    p.add_argument('--config', required=True, help="JSON list of configs, or {'base': ..., 'axes': ...}.")
    p.add_argument('--workers', type=int, default=1)
    p.add_argument('--no-timing', action='store_true', help='Write wall_ms as 0 for byte-reproducible output.')
    p.set_defaults(func=cmd_sweep, format='csv')

    p = common(sub.add_parser('mic-cert', help='Lower-bound certificate from POVM JSON.'))
    p.add_argument('--povms', required=True, help='POVM JSON object or list of them.')
    p.add_argument('--eps', type=float, required=True)
    p.set_defaults(func=cmd_mic_cert)

    p = common(sub.add_parser('verify', help='Run invariant suites.'))
    p.add_argument('--suite', default='all', help="'all' or a comma-separated list of suite names.")
    p.add_argument('--scale', type=float, default=1.0, help='Multiplier on sample counts.')
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser('simulate', help='l-bit simulation demo.'))
    p.add_argument('--d', type=int, required=True)
    p.add_argument('--ell', type=int, required=True)
    p.add_argument('--eta', type=float, default=SIMULATION_ETA)
    p.add_argument('--runs', type=int, default=10_000)
    p.add_argument('--p', default=None, help='Comma-separated distribution (default uniform).')
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except FileNotFoundError as e:
        logger.error(f"File not found: {e.filename}. Check the path passed on the command line.")
    except json.JSONDecodeError as e:
        logger.error(f"Could not parse JSON input: {e}")
    except CertLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
