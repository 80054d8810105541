# File: src/config.py

import math
import os

from .errors import ConfigError

# --- Path Configuration (Standard for local scripts) ---
# Assuming this script is located in 'src/'
project_root = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.abspath(os.path.join(project_root, os.pardir))

RESULTS_DIR = os.path.join(project_root, 'results')
CONFIGS_DIR = os.path.join(project_root, 'configs')

# --- Numerical tolerances ---
HERMITIAN_TOL = 1e-10
PSD_FLOOR = -1e-8
RECONSTRUCTION_TOL = 1e-9
TRACE_TOL = 1e-10
POVM_COMPLETENESS_TOL = 1e-8
BORN_CLIP_TOL = 1e-10
ZERO_TRACE_EFFECT = 1e-12
KERNEL_ZERO_TOL = 1e-14
ORTHONORMAL_TOL = 1e-8
EIGEN_CLUSTER_TOL = 1e-8

# --- Algorithm constants ---
PAPER_CONSTANT = 1000.0
CALIBRATED_CONSTANT = 10.0
CONSTANTS_MODES = ('paper', 'calibrated')

VOTE_T1 = 0.03
VOTE_T2 = 0.1
HOEFFDING_ALPHA = 2.0 / 3.0

SIMULATION_ETA = 0.01
SIMULATION_ATTEMPT_FACTOR = 40

KAPPA_1 = 10.0
DEFAULT_C = 10.0 * math.sqrt(2.0)
RANDOMIZED_RADIUS_FACTOR = 0.07
RANDOMIZED_DELTA = 0.01
MUB_DELTA = 1.0 / 6.0

GAME_THRESHOLD = 2.0 / 25.0
ALMOST_EPS_FRACTION = 0.5

DOMAIN_NORM_FACTOR = 10.0
DOMAIN_DISTANCE_FACTOR = 0.07
DOMAIN_NORM_GUARANTEE = 0.98
DOMAIN_DISTANCE_GUARANTEE = 0.13

FOURTH_MOMENT_SLACK = 10.0

# --- Enumeration caps ---
MAX_OUTCOME_STRINGS = 10 ** 6
MAX_SIGN_VECTORS = 256

# --- Monte Carlo gates ---
Z_GATE = 4.0
MIN_TRIALS_FOR_INTERVAL = 30

# --- Output schema ---
CSV_COLUMNS = [
    'certifier', 'd', 'k', 'eps', 'n', 'mode', 'trials', 'successes',
    'rate', 'wilson_lo', 'wilson_hi', 'seed', 'wall_ms',
]

# --- CLI exit codes ---
EXIT_OK = 0
EXIT_VERDICT_NO = 1
EXIT_VALIDATION = 2
EXIT_SUITE_FAILURE = 3


def is_power_of_two(value) -> bool:
    """True for 1, 2, 4, 8, ..."""
    try:
        as_int = int(value)
    except (TypeError, ValueError):
        return False
    return as_int == value and as_int >= 1 and (as_int & (as_int - 1)) == 0


def leading_constant(mode: str, constant: float | None = None) -> float:
    """
    Resolves the leading constant of a sample-size formula.
    Args:
        mode (str): 'paper' or 'calibrated'.
        constant (float | None): Explicit override for calibrated runs.
    Returns:
        float: The constant to multiply the order expression with.
    """
    if mode not in CONSTANTS_MODES:
        raise ConfigError(f"Unknown constants mode '{mode}'. Expected one of {CONSTANTS_MODES}.")
    if constant is not None:
        if constant <= 0:
            raise ConfigError(f"Leading constant must be positive, got {constant}.")
        return float(constant)
    return PAPER_CONSTANT if mode == 'paper' else CALIBRATED_CONSTANT
