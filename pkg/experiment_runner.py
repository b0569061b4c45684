"""
Experiment Runner for the Two-Walker Gravity Simulator
Builds an ExperimentConfig from defaults, a KEY = value file and overrides,
runs one experiment and writes its table as CSV or JSON.

Experiments:
    single_walk        P(x) of one walker at the final step (+ optional per-step moments)
    entanglement_curve EE, full and spin-traced negativity for t = 1..steps
    theta_sweep        EE and full negativity at t = steps over a theta_A x theta_B grid
    noise_curve        noiseless vs flip-noise negativity for t = 1..steps
    moment_analysis    second central moment of one walker across a theta grid
"""
import itertools
import logging
import os
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from joblib import Parallel, delayed

from config import EXPERIMENT_CONFIG, NOISE_CONFIG, OUTPUT_DIR, ConfigError
from entanglement import (
    PARTY_B, entanglement_entropy, entanglement_report, negativity, pure_state_negativity, reduce_density,
)
from gravity_phase import GeometrySpec, MassPair, build_joint_state, build_phase_field
from noise_channels import PAULIS, NoiseSpec, build_ensemble, ensemble_joint_density
from quantum_walk import (
    HADAMARD, CoinSpec, SpinState, central_moment, evolve, position_distribution, walk_states,
)

logger = logging.getLogger(__name__)

EXPERIMENTS = ('single_walk', 'entanglement_curve', 'theta_sweep', 'noise_curve', 'moment_analysis')
TWO_WALKER_EXPERIMENTS = ('entanglement_curve', 'theta_sweep', 'noise_curve')
COINS = ('hadamard', 'rotation')
OUTPUT_FORMATS = ('csv', 'json')

# Fixed column order per table
COLUMNS = {
    'single_walk': ['x', 'probability'],
    'walk_moments': ['t', 'mean', 'm2'],
    'entanglement_curve': ['t', 'ee_nats', 'neg_full', 'neg_traced'],
    'theta_sweep': ['theta_a', 'theta_b', 'ee_nats', 'neg_full'],
    'noise_curve': ['t', 'neg_noiseless', 'neg_noisy'],
    'moment_analysis': ['theta', 'm2', 'sin2_m2'],
}

_ANGLE = re.compile(r'^(?:(?P<coef>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\*?\s*)?pi(?:\s*/\s*(?P<div>[0-9]*\.?[0-9]+))?$')


def parse_angle(value, name: str = 'angle') -> float:
    """Radians from a number or a pi expression ('pi', 'pi/4', '5*pi/12', '2pi/3')"""
    if isinstance(value, (int, float, np.floating)) and not isinstance(value, bool):
        return float(value)

    text = str(value).strip().lower().replace(' ', '')
    match = _ANGLE.match(text)
    if match:
        coef = float(match.group('coef') or 1.0)
        div = float(match.group('div') or 1.0)
        if div == 0:
            raise ConfigError(f"{name}: division by zero in angle '{value}'")
        return coef * np.pi / div
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse angle '{value}'") from None


def _parse_grid(value, name):
    if isinstance(value, str):
        parts = [part for part in value.split(',') if part.strip()]
    else:
        parts = list(value)
    return [parse_angle(part, name) for part in parts]


def _parse_bool(value, name):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('1', 'true', 'yes', 'on'):
        return True
    if text in ('0', 'false', 'no', 'off', ''):
        return False
    raise ConfigError(f"{name}: expected a boolean, got '{value}'")


def _parse_optional(value, name):
    if value is None:
        return None
    text = str(value).strip()
    return None if text.lower() in ('', 'none', 'null') else text


def _parser(kind):
    def parse(value, name):
        try:
            return kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name}: expected {kind.__name__}, got '{value}'") from None
    return parse


def _parse_lower(value, name):
    return str(value).strip().lower()


FIELD_PARSERS = {
    'experiment': _parse_lower,
    'theta_a': parse_angle,
    'theta_b': parse_angle,
    'spin_a': _parse_lower,
    'spin_b': _parse_lower,
    'steps': _parser(int),
    'separation': _parser(int),
    'step_ratio': _parser(float),
    'coin': _parse_lower,
    'noise_kind': _parse_optional,
    'noise_p': _parser(float),
    'samples': _parser(int),
    'seed': _parser(int),
    'theta_grid': _parse_grid,
    'moments': _parse_bool,
    'output_path': _parse_optional,
    'output_format': _parse_lower,
    'n_jobs': _parser(int),
}


@dataclass
class ExperimentConfig:
    experiment: str = EXPERIMENT_CONFIG['experiment']
    theta_a: float = EXPERIMENT_CONFIG['theta_a']
    theta_b: float = EXPERIMENT_CONFIG['theta_b']
    spin_a: str = EXPERIMENT_CONFIG['spin_a']
    spin_b: str = EXPERIMENT_CONFIG['spin_b']
    steps: int = EXPERIMENT_CONFIG['steps']
    separation: int = EXPERIMENT_CONFIG['separation']
    step_ratio: float = EXPERIMENT_CONFIG['step_ratio']
    coin: str = EXPERIMENT_CONFIG['coin']
    noise_kind: Optional[str] = EXPERIMENT_CONFIG['noise_kind']
    noise_p: float = EXPERIMENT_CONFIG['noise_p']
    samples: int = EXPERIMENT_CONFIG['samples']
    seed: int = EXPERIMENT_CONFIG['seed']
    theta_grid: List[float] = field(default_factory=lambda: list(EXPERIMENT_CONFIG['theta_grid']))
    moments: bool = EXPERIMENT_CONFIG['moments']
    output_path: Optional[str] = EXPERIMENT_CONFIG['output_path']
    output_format: str = EXPERIMENT_CONFIG['output_format']
    n_jobs: int = EXPERIMENT_CONFIG['n_jobs']

    def validate(self) -> 'ExperimentConfig':
        """Raise ConfigError naming the first invalid field"""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown experiment '{self.experiment}', expected one of {EXPERIMENTS}")
        if self.steps < 1:
            raise ConfigError(f"steps: must be >= 1, got {self.steps}")

        for name in ('theta_a', 'theta_b'):
            _check_angle(getattr(self, name), name)
        if not self.theta_grid:
            raise ConfigError("theta_grid: must contain at least one angle")
        for theta in self.theta_grid:
            _check_angle(theta, 'theta_grid')

        for name in ('spin_a', 'spin_b'):
            try:
                SpinState.from_label(getattr(self, name))
            except ValueError as e:
                raise ConfigError(f"{name}: {e}") from None

        if self.separation < 1:
            raise ConfigError(f"separation: must be a positive integer, got {self.separation}")
        if self.experiment in TWO_WALKER_EXPERIMENTS and self.separation <= 2 * self.steps:
            raise ConfigError(
                f"separation: L={self.separation} must exceed 2 * steps = {2 * self.steps}"
            )
        if self.step_ratio <= 0:
            raise ConfigError(f"step_ratio: must be positive, got {self.step_ratio}")
        if self.coin not in COINS:
            raise ConfigError(f"coin: unknown coin '{self.coin}', expected one of {COINS}")

        if self.noise_kind is not None and self.noise_kind not in PAULIS:
            raise ConfigError(f"noise_kind: unknown noise '{self.noise_kind}', expected one of {sorted(PAULIS)}")
        if self.experiment == 'noise_curve' and self.noise_kind is None:
            raise ConfigError("noise_kind: required for the noise_curve experiment")
        if self.experiment == 'entanglement_curve' and self.noise_kind is not None:
            raise ConfigError("noise_kind: the entanglement_curve experiment is noiseless, use noise_curve")
        if not 0.0 <= self.noise_p <= 1.0:
            raise ConfigError(f"noise_p: must be in [0, 1], got {self.noise_p}")
        if self.samples < 1:
            raise ConfigError(f"samples: must be positive, got {self.samples}")

        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format: expected one of {OUTPUT_FORMATS}, got '{self.output_format}'")
        if self.n_jobs == 0 or self.n_jobs < -1:
            raise ConfigError(f"n_jobs: must be positive or -1, got {self.n_jobs}")
        return self

    @property
    def spins(self) -> Tuple[SpinState, SpinState]:
        return SpinState.from_label(self.spin_a), SpinState.from_label(self.spin_b)

    @property
    def masses(self) -> MassPair:
        return MassPair(self.theta_a, self.theta_b)

    @property
    def geometry(self) -> GeometrySpec:
        return GeometrySpec(self.separation, self.step_ratio)

    @property
    def noise(self) -> Optional[NoiseSpec]:
        if self.noise_kind is None:
            return None
        return NoiseSpec(self.noise_kind, self.noise_p)

    def to_dict(self) -> Dict:
        return asdict(self)


def _check_angle(theta, name):
    if not 0.0 <= theta <= np.pi / 2:
        raise ConfigError(f"{name}: angle {theta} outside [0, pi/2]")


def read_config_file(path: str) -> Dict:
    """KEY = value pairs from a config file, keys lower-cased and checked"""
    if not os.path.exists(path):
        raise ConfigError(f"config: file not found '{path}'")

    values = {}
    for key, value in dotenv_values(path).items():
        name = key.strip().lower()
        if name not in FIELD_PARSERS:
            raise ConfigError(f"{name}: unknown config key in '{path}'")
        values[name] = value
    logger.debug(f"Read {len(values)} keys from {path}")
    return values


def load_config(path: Optional[str] = None, overrides: Optional[Dict] = None) -> ExperimentConfig:
    """
    Resolve an ExperimentConfig.

    Precedence is defaults (EXPERIMENT_CONFIG, which already reads QWG_*
    environment variables) < config file < overrides. None-valued
    overrides are ignored so unset CLI flags fall through.
    """
    raw = {}
    if path:
        raw.update(read_config_file(path))
    for name, value in (overrides or {}).items():
        if name not in FIELD_PARSERS:
            raise ConfigError(f"{name}: unknown config key")
        if value is not None:
            raw[name] = value

    parsed = {name: FIELD_PARSERS[name](value, name) for name, value in raw.items()}
    return replace(ExperimentConfig(), **parsed).validate()


class ExperimentRunner:
    """Runs one configured experiment and keeps its result table"""

    def __init__(self, config: Optional[ExperimentConfig] = None):
        self.config = (config or ExperimentConfig()).validate()
        self.results = None
        self.moments = None

    def run(self) -> pd.DataFrame:
        experiment = self.config.experiment
        logger.info(f"Running {experiment} ({self.config.steps} steps)")
        handlers = {
            'single_walk': self.run_single_walk,
            'entanglement_curve': self.run_entanglement_curve,
            'theta_sweep': self.run_theta_sweep,
            'noise_curve': self.run_noise_curve,
            'moment_analysis': self.run_moment_analysis,
        }
        self.results = handlers[experiment]()
        logger.info(f"Finished {experiment}: {len(self.results)} rows")
        return self.results

    def _walk_coin(self):
        if self.config.coin == 'hadamard':
            return HADAMARD
        return CoinSpec(self.config.theta_a)

    def run_single_walk(self) -> pd.DataFrame:
        """P(x) at the final step; per-step moments go to self.moments when enabled"""
        spin_a, _ = self.config.spins
        coin = self._walk_coin()

        state = None
        moments = []
        for state in walk_states(spin_a, coin, self.config.steps):
            if self.config.moments:
                moments.append({
                    't': state.t,
                    'mean': float(np.sum(position_distribution(state) * state.positions)),
                    'm2': central_moment(state, 2),
                })

        if self.config.moments:
            self.moments = pd.DataFrame(moments, columns=COLUMNS['walk_moments'])
        return pd.DataFrame({
            'x': state.positions,
            'probability': position_distribution(state),
        }, columns=COLUMNS['single_walk'])

    def single_walk_moments(self) -> pd.DataFrame:
        """Per-step mean and second central moment of the single walk"""
        if self.moments is None:
            self.config = replace(self.config, moments=True)
            self.run_single_walk()
        return self.moments

    def run_entanglement_curve(self) -> pd.DataFrame:
        spin_a, spin_b = self.config.spins
        masses = self.config.masses
        geom = self.config.geometry
        geom.check_spread(self.config.steps)

        walks_a = walk_states(spin_a, CoinSpec(masses.theta_a), self.config.steps)
        walks_b = walk_states(spin_b, CoinSpec(masses.theta_b), self.config.steps)
        rows = []
        for walk_a, walk_b in zip(walks_a, walks_b):
            if walk_a.t == 0:
                continue
            joint = build_joint_state(walk_a, walk_b, build_phase_field(walk_a.t, geom, masses))
            report = entanglement_report(joint)
            rows.append({
                't': report.t,
                'ee_nats': report.entropy,
                'neg_full': report.negativity_full,
                'neg_traced': report.negativity_spin_traced,
            })
            logger.debug(f"t={report.t}: EE={report.entropy:.4e}")
        return pd.DataFrame(rows, columns=COLUMNS['entanglement_curve'])

    def _sweep_point(self, theta_a: float, theta_b: float) -> Dict:
        spin_a, spin_b = self.config.spins
        masses = MassPair(theta_a, theta_b)
        t = self.config.steps
        walk_a = evolve(spin_a, CoinSpec(theta_a), t)
        walk_b = evolve(spin_b, CoinSpec(theta_b), t)
        joint = build_joint_state(walk_a, walk_b, build_phase_field(t, self.config.geometry, masses))
        return {
            'theta_a': theta_a,
            'theta_b': theta_b,
            'ee_nats': entanglement_entropy(reduce_density(joint, PARTY_B)),
            'neg_full': pure_state_negativity(joint),
        }

    def run_theta_sweep(self) -> pd.DataFrame:
        """theta_A x theta_B grid at t = steps; rows in grid order"""
        self.config.geometry.check_spread(self.config.steps)
        grid = list(itertools.product(self.config.theta_grid, repeat=2))
        logger.info(f"Sweeping {len(grid)} grid points with n_jobs={self.config.n_jobs}")

        rows = Parallel(n_jobs=self.config.n_jobs, prefer='threads')(
            delayed(self._sweep_point)(theta_a, theta_b) for theta_a, theta_b in grid
        )
        return pd.DataFrame(rows, columns=COLUMNS['theta_sweep'])

    def run_noise_curve(self) -> pd.DataFrame:
        """Noiseless and noisy full-state negativity for t = 1..steps"""
        spins = self.config.spins
        masses = self.config.masses
        geom = self.config.geometry
        noise = self.config.noise
        geom.check_spread(self.config.steps)
        noise_config = {**NOISE_CONFIG, 'samples': self.config.samples, 'seed': self.config.seed}

        walks_a = walk_states(spins[0], CoinSpec(masses.theta_a), self.config.steps)
        walks_b = walk_states(spins[1], CoinSpec(masses.theta_b), self.config.steps)
        rows = []
        for walk_a, walk_b in zip(walks_a, walks_b):
            t = walk_a.t
            if t == 0:
                continue
            joint = build_joint_state(walk_a, walk_b, build_phase_field(t, geom, masses))
            ensemble = build_ensemble(noise, t, noise_config)
            rho = ensemble_joint_density(spins, masses, geom, noise, t, ensemble)
            rows.append({
                't': t,
                'neg_noiseless': pure_state_negativity(joint),
                'neg_noisy': negativity(rho, PARTY_B),
            })
            logger.debug(f"t={t}: {ensemble.mode} ensemble of {len(ensemble.trajectories)}")
        return pd.DataFrame(rows, columns=COLUMNS['noise_curve'])

    def run_moment_analysis(self) -> pd.DataFrame:
        spin_a, _ = self.config.spins
        rows = []
        for theta in self.config.theta_grid:
            m2 = central_moment(evolve(spin_a, CoinSpec(theta), self.config.steps), 2)
            rows.append({'theta': theta, 'm2': m2, 'sin2_m2': np.sin(theta) ** 2 * m2})
        return pd.DataFrame(rows, columns=COLUMNS['moment_analysis'])

    def output_path(self) -> str:
        if self.config.output_path:
            return self.config.output_path
        return os.path.join(OUTPUT_DIR, f"{self.config.experiment}.{self.config.output_format}")

    def write_results(self) -> List[str]:
        """Write the result table (and the moments sidecar if any); returns the paths written"""
        if self.results is None:
            raise ValueError("No results to write, call run() first")

        path = self.output_path()
        written = [path]
        write_table(self.results, path, self.config.output_format)
        if self.moments is not None:
            stem, _ = os.path.splitext(path)
            sidecar = f"{stem}_moments.{self.config.output_format}"
            write_table(self.moments, sidecar, self.config.output_format)
            written.append(sidecar)
        return written

    def print_summary(self):
        """Banner with the configuration and the final result row"""
        if self.results is None or self.results.empty:
            print("No results. Run run() first.")
            return

        c = self.config
        print(f"\n{'='*60}")
        print(f"EXPERIMENT: {c.experiment}")
        print(f"{'='*60}")
        print(f"Steps:              {c.steps}")
        if c.experiment in TWO_WALKER_EXPERIMENTS:
            print(f"Theta A / B:        {c.theta_a:.4f} / {c.theta_b:.4f}")
            print(f"Spins A / B:        {c.spin_a} / {c.spin_b}")
            print(f"Separation L:       {c.separation}")
        if c.noise is not None:
            print(f"Noise:              {c.noise_kind} (p={c.noise_p})")
        print(f"Rows:               {len(self.results)}")
        print("Final row:")
        for column, value in self.results.iloc[-1].items():
            print(f"  {column:<18}{value:.6e}")
        print(f"{'='*60}\n")


def write_table(df: pd.DataFrame, path: str, fmt: str = 'csv'):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    if fmt == 'csv':
        df.to_csv(path, index=False)
    elif fmt == 'json':
        df.to_json(path, orient='records')
    else:
        raise ConfigError(f"output_format: expected one of {OUTPUT_FORMATS}, got '{fmt}'")
    logger.info(f"Wrote {len(df)} rows to {path}")
