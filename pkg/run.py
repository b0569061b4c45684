#!/usr/bin/env python3
"""
Two-Walker Gravity Simulator - Main Entry Point

Usage:
    python run.py walk     [--coin hadamard|rotation] [--spin-a LABEL] [--steps N] [--moments]
    python run.py curve    [--theta-a A] [--theta-b B] [--spin-a S] [--spin-b S] [--steps N]
    python run.py sweep    [--grid A1,A2,...] [--steps N] [--jobs N]
    python run.py noise    --noise-kind bit_flip|phase_flip [--noise-p P] [--samples N] [--seed S]
    python run.py moments  [--grid A1,A2,...] [--spin-a S] [--steps N]

Every command also takes --config FILE (KEY = value lines), --out PATH,
--format csv|json and --verbose. Flags win over the config file.

Examples:
    python run.py walk --steps 100 --spin-a plus_i --out results/walk.csv
    python run.py curve --theta-a pi/4 --theta-b pi/6 --steps 15
    python run.py sweep --grid pi/12,pi/6,pi/4,pi/3,5*pi/12 --jobs 4
    python run.py noise --noise-kind bit_flip --noise-p 0.02 --spin-a down --spin-b up

Exit codes: 0 success, 2 configuration or output error, 3 numerical failure.
"""
import argparse
import logging
import os
import sys

import numpy as np

# Add this directory for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import ConfigError  # noqa: E402

logger = logging.getLogger(__name__)

COMMANDS = {
    'walk': 'single_walk',
    'curve': 'entanglement_curve',
    'sweep': 'theta_sweep',
    'noise': 'noise_curve',
    'moments': 'moment_analysis',
}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Entanglement of two parallel quantum walks through gravity')
    subparsers = parser.add_subparsers(dest='command', required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='KEY = value config file')
    common.add_argument('--steps', help='Number of walk steps')
    common.add_argument('--theta-a', dest='theta_a', help='Coin angle of walker A (radians or pi/4 style)')
    common.add_argument('--theta-b', dest='theta_b', help='Coin angle of walker B')
    common.add_argument('--spin-a', dest='spin_a', help='Initial spin of walker A (up, down, plus, minus, plus_i, minus_i)')
    common.add_argument('--spin-b', dest='spin_b', help='Initial spin of walker B')
    common.add_argument('--separation', help='Distance L between the two lines')
    common.add_argument('--ratio', dest='step_ratio', help='Time to distance step ratio N_t / N_d')
    common.add_argument('--out', dest='output_path', help='Output file')
    common.add_argument('--format', dest='output_format', choices=['csv', 'json'], help='Output format')
    common.add_argument('-v', '--verbose', action='store_true', help='Debug logging')

    walk = subparsers.add_parser('walk', parents=[common], help='Single walk position distribution')
    walk.add_argument('--coin', choices=['hadamard', 'rotation'], help='Hadamard or C(theta_a) coin')
    walk.add_argument('--moments', action='store_true', default=None, help='Also write per-step moments')

    subparsers.add_parser('curve', parents=[common], help='Entanglement vs step')

    sweep = subparsers.add_parser('sweep', parents=[common], help='Entanglement over a theta_A x theta_B grid')
    sweep.add_argument('--grid', dest='theta_grid', help='Comma-separated angles')
    sweep.add_argument('--jobs', dest='n_jobs', help='Parallel workers (-1 for all cores)')

    noise = subparsers.add_parser('noise', parents=[common], help='Negativity with flip noise on walker A')
    noise.add_argument('--noise-kind', dest='noise_kind', choices=['bit_flip', 'phase_flip'])
    noise.add_argument('--noise-p', dest='noise_p', help='Flip probability per step')
    noise.add_argument('--samples', help='Monte Carlo trajectories beyond the exact range')
    noise.add_argument('--seed', help='Sampling seed')

    moments = subparsers.add_parser('moments', parents=[common], help='Second moment across a theta grid')
    moments.add_argument('--grid', dest='theta_grid', help='Comma-separated angles')

    return parser


def overrides_from_args(args) -> dict:
    """Flags that were given, keyed by ExperimentConfig field"""
    skip = {'command', 'config', 'verbose'}
    overrides = {key: value for key, value in vars(args).items() if key not in skip and value is not None}
    overrides['experiment'] = COMMANDS[args.command]
    return overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s [%(levelname)s] %(message)s'
    )

    from experiment_runner import ExperimentRunner, load_config

    try:
        config = load_config(args.config, overrides_from_args(args))
        runner = ExperimentRunner(config)
        runner.run()
        paths = runner.write_results()
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"Cannot write results: {e}")
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, ValueError, FloatingPointError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL

    runner.print_summary()
    for path in paths:
        print(f"Saved: {path}")
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
