"""
Quantum Walk Gravity Simulator Configuration
Defaults for the walks, geometry, entanglement numerics, noise and experiments.

Every default can be overridden from the environment (QWG_* variables) or,
for experiments, from a KEY = value file and CLI flags (see experiment_runner).
"""
import os

import numpy as np

# Paths
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
OUTPUT_DIR = os.getenv('QWG_OUTPUT_DIR', os.path.join(BASE_DIR, 'results'))


class ConfigError(ValueError):
    """Invalid configuration value; the message names the field"""


# Single walker numerics
WALK_CONFIG = {
    'norm_tolerance': 1e-12,
    'coin_unitarity_tolerance': 1e-12,  # U^dagger U vs identity for explicit coin matrices
}

# Two parallel walks
GEOMETRY_CONFIG = {
    'separation': int(os.getenv('QWG_SEPARATION', '100')),  # L, lattice units
    'step_ratio': float(os.getenv('QWG_STEP_RATIO', '1.0')),  # N_t / N_d
}

# Density matrices and spectra
ENTANGLEMENT_CONFIG = {
    'eigenvalue_floor': 1e-14,  # below this an eigenvalue contributes 0 entropy
    'hermitian_tolerance': 1e-12,
    'trace_tolerance': 1e-12,
    'negative_tolerance': 1e-10,  # smallest admissible eigenvalue is -this
    'clamp_warning': 1e-12,  # clipped eigenvalues beyond this are logged
}

# Flip noise on walker A
NOISE_CONFIG = {
    'exact_max_steps': 12,  # enumerate all 2^t trajectories up to here
    'samples': int(os.getenv('QWG_SAMPLES', '4096')),
    'seed': int(os.getenv('QWG_SEED', '0')),
}

# Experiment runner defaults
EXPERIMENT_CONFIG = {
    'experiment': 'entanglement_curve',
    'theta_a': np.pi / 4,
    'theta_b': np.pi / 6,
    'spin_a': 'up',
    'spin_b': 'down',
    'steps': 15,
    'separation': GEOMETRY_CONFIG['separation'],
    'step_ratio': GEOMETRY_CONFIG['step_ratio'],
    'coin': 'hadamard',  # single_walk only; two-walker runs use C(theta)
    'noise_kind': None,
    'noise_p': 0.02,
    'samples': NOISE_CONFIG['samples'],
    'seed': NOISE_CONFIG['seed'],
    'theta_grid': [np.pi / 12, np.pi / 6, np.pi / 4, np.pi / 3, 5 * np.pi / 12],
    'moments': False,
    'output_path': None,
    'output_format': 'csv',
    'n_jobs': int(os.getenv('QWG_N_JOBS', '2')),
}
