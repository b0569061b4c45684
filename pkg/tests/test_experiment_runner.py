import json

import numpy as np
import pandas as pd
import pytest

import experiment_runner
import run
from config import ConfigError
from experiment_runner import COLUMNS, ExperimentConfig, ExperimentRunner, load_config, parse_angle


@pytest.mark.parametrize('text, expected', [
    ('pi', np.pi),
    ('pi/4', np.pi / 4),
    ('PI / 3', np.pi / 3),
    ('5*pi/12', 5 * np.pi / 12),
    ('2pi/3', 2 * np.pi / 3),
    ('0.25', 0.25),
    (0.5, 0.5),
])
def test_parse_angle(text, expected):
    assert np.isclose(parse_angle(text), expected)


def test_parse_angle_rejects_garbage():
    with pytest.raises(ConfigError, match='theta_a'):
        parse_angle('quarter', 'theta_a')


def test_defaults_are_valid():
    config = ExperimentConfig().validate()
    assert config.experiment == 'entanglement_curve'
    assert config.steps == 15
    assert np.isclose(config.theta_a, np.pi / 4)
    assert np.isclose(config.theta_b, np.pi / 6)
    assert (config.spin_a, config.spin_b) == ('up', 'down')


@pytest.mark.parametrize('overrides, field', [
    ({'steps': 0}, 'steps'),
    ({'theta_a': 2.0}, 'theta_a'),
    ({'spin_b': 'sideways'}, 'spin_b'),
    ({'separation': 20}, 'separation'),
    ({'step_ratio': -1.0}, 'step_ratio'),
    ({'experiment': 'plot'}, 'experiment'),
    ({'experiment': 'noise_curve'}, 'noise_kind'),
    ({'noise_kind': 'bit_flip'}, 'noise_kind'),
    ({'experiment': 'noise_curve', 'noise_kind': 'bit_flip', 'noise_p': 2.0}, 'noise_p'),
    ({'output_format': 'xml'}, 'output_format'),
    ({'theta_grid': []}, 'theta_grid'),
    ({'n_jobs': 0}, 'n_jobs'),
])
def test_invalid_config_names_field(overrides, field):
    with pytest.raises(ConfigError, match=field):
        load_config(overrides=overrides)


def test_single_walk_ignores_separation():
    config = load_config(overrides={'experiment': 'single_walk', 'steps': 100, 'separation': 20})
    assert config.steps == 100


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / 'experiment.env'
    path.write_text('EXPERIMENT=theta_sweep\nTHETA_A = pi/3\nSTEPS=6\nTHETA_GRID=pi/6,pi/4\n# comment\n')

    config = load_config(str(path))
    assert config.experiment == 'theta_sweep'
    assert np.isclose(config.theta_a, np.pi / 3)
    assert config.steps == 6
    assert np.allclose(config.theta_grid, [np.pi / 6, np.pi / 4])

    config = load_config(str(path), {'steps': '8', 'theta_b': None})
    assert config.steps == 8
    assert np.isclose(config.theta_b, np.pi / 6)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match='not found'):
        load_config(str(tmp_path / 'missing.env'))
    path = tmp_path / 'bad.env'
    path.write_text('COLOR=blue\n')
    with pytest.raises(ConfigError, match='color'):
        load_config(str(path))
    path.write_text('STEPS=many\n')
    with pytest.raises(ConfigError, match='steps'):
        load_config(str(path))


def test_single_walk_distribution():
    runner = ExperimentRunner(load_config(overrides={'experiment': 'single_walk', 'steps': 100, 'spin_a': 'plus_i'}))
    df = runner.run()
    assert list(df.columns) == COLUMNS['single_walk']
    assert len(df) == 201
    assert np.isclose(df['probability'].sum(), 1.0)
    probs = df['probability'].to_numpy()
    assert np.max(np.abs(probs - probs[::-1])) <= 1e-12
    assert np.all(probs[df['x'].to_numpy() % 2 == 1] <= 1e-14)


def test_single_walk_moments():
    runner = ExperimentRunner(load_config(overrides={'experiment': 'single_walk', 'steps': 5}))
    moments = runner.single_walk_moments()
    assert list(moments.columns) == COLUMNS['walk_moments']
    assert list(moments['t']) == list(range(6))
    assert moments['m2'].iloc[0] == 0
    # Hadamard from up after 3 steps: P = (1, 5, 1, 1) / 8 on x = -3, -1, 1, 3
    assert np.isclose(moments['mean'].iloc[3], -0.5)
    assert np.isclose(moments['m2'].iloc[3], 2.75)


def test_entanglement_curve_columns():
    df = ExperimentRunner(load_config(overrides={'steps': 4})).run()
    assert list(df.columns) == COLUMNS['entanglement_curve']
    assert list(df['t']) == [1, 2, 3, 4]
    assert np.all(df[['ee_nats', 'neg_full', 'neg_traced']].to_numpy() >= -1e-12)


def test_entanglement_curve_without_coupling():
    df = ExperimentRunner(load_config(overrides={'steps': 8, 'theta_a': 0.0})).run()
    assert np.all(np.abs(df[['ee_nats', 'neg_full', 'neg_traced']].to_numpy()) <= 1e-12)


@pytest.mark.slow
def test_entanglement_curve_spin_swap():
    first = ExperimentRunner(load_config(overrides={'spin_a': 'up', 'spin_b': 'down'})).run()
    second = ExperimentRunner(load_config(overrides={'spin_a': 'down', 'spin_b': 'up'})).run()
    assert np.max(np.abs(first['ee_nats'] - second['ee_nats'])) <= 1e-9
    assert np.max(np.abs(first['neg_full'] - second['neg_full'])) <= 1e-9
    assert np.all(np.diff(first.loc[first['t'] >= 4, 'ee_nats']) >= 0)


def test_theta_sweep_grid_order_and_symmetry():
    grid = [0.0, np.pi / 6, np.pi / 3]
    config = load_config(overrides={'experiment': 'theta_sweep', 'steps': 6, 'theta_grid': grid, 'n_jobs': 2})
    df = ExperimentRunner(config).run()
    assert list(df.columns) == COLUMNS['theta_sweep']
    assert len(df) == 9
    assert list(zip(df['theta_a'], df['theta_b']))[:3] == [(0.0, 0.0), (0.0, np.pi / 6), (0.0, np.pi / 3)]

    assert np.all(np.abs(df[df['theta_a'] == 0.0][['ee_nats', 'neg_full']].to_numpy()) <= 1e-12)
    surface = df.pivot(index='theta_a', columns='theta_b', values='ee_nats').to_numpy()
    np.testing.assert_allclose(surface, surface.T, atol=1e-9)


@pytest.mark.slow
def test_theta_sweep_diagonal_peak():
    grid = [np.pi / 12, np.pi / 6, np.pi / 4, np.pi / 3, 5 * np.pi / 12]
    df = ExperimentRunner(load_config(overrides={'experiment': 'theta_sweep', 'theta_grid': grid})).run()
    diagonal = df[np.isclose(df['theta_a'], df['theta_b'])].reset_index(drop=True)
    peak = diagonal['theta_a'].iloc[int(diagonal['ee_nats'].idxmax())]
    assert np.isclose(peak, np.pi / 4) or np.isclose(peak, np.pi / 3)
    assert diagonal['ee_nats'].iloc[4] < diagonal['ee_nats'].iloc[3]


def _noise_config(**overrides):
    values = {'experiment': 'noise_curve', 'noise_kind': 'bit_flip', 'steps': 8,
              'spin_a': 'down', 'spin_b': 'up'}
    values.update(overrides)
    return load_config(overrides=values)


def test_noise_curve_without_noise_matches_noiseless():
    df = ExperimentRunner(_noise_config(noise_p=0.0, steps=5)).run()
    assert list(df.columns) == COLUMNS['noise_curve']
    np.testing.assert_allclose(df['neg_noisy'], df['neg_noiseless'], atol=1e-10)


@pytest.mark.slow
def test_noise_curve_kinds_differ_and_reduce_negativity():
    bit = ExperimentRunner(_noise_config(noise_kind='bit_flip')).run()
    phase = ExperimentRunner(_noise_config(noise_kind='phase_flip')).run()
    assert np.all(bit['neg_noisy'] <= bit['neg_noiseless'] + 1e-12)
    assert np.all(phase['neg_noisy'] <= phase['neg_noiseless'] + 1e-12)
    assert abs(bit['neg_noisy'].iloc[-1] - phase['neg_noisy'].iloc[-1]) > 1e-12


def test_moment_analysis():
    grid = [np.pi / 12, np.pi / 6, np.pi / 4, np.pi / 3, 5 * np.pi / 12]
    config = load_config(overrides={'experiment': 'moment_analysis', 'theta_grid': grid, 'spin_a': 'plus_i'})
    df = ExperimentRunner(config).run()
    assert list(df.columns) == COLUMNS['moment_analysis']
    assert np.all(np.diff(df['m2']) < 0)
    peak = int(np.argmax(df['sin2_m2']))
    assert 0 < peak < len(grid) - 1
    np.testing.assert_allclose(df['sin2_m2'], np.sin(df['theta']) ** 2 * df['m2'])


def test_moment_analysis_bounce_walk():
    config = load_config(overrides={'experiment': 'moment_analysis', 'theta_grid': [np.pi / 2]})
    df = ExperimentRunner(config).run()
    assert abs(df['m2'].iloc[0]) <= 1e-12


def test_write_requires_results():
    with pytest.raises(ValueError, match='No results'):
        ExperimentRunner().write_results()


@pytest.mark.parametrize('fmt', ['csv', 'json'])
def test_output_is_reproducible(tmp_path, fmt):
    paths = []
    for name in ('first', 'second'):
        out = tmp_path / f'{name}.{fmt}'
        config = _noise_config(steps=4, noise_p=0.1, output_path=str(out), output_format=fmt)
        runner = ExperimentRunner(config)
        runner.run()
        runner.write_results()
        paths.append(out)
    assert paths[0].read_bytes() == paths[1].read_bytes()

    if fmt == 'csv':
        df = pd.read_csv(paths[0])
    else:
        df = pd.DataFrame(json.loads(paths[0].read_text()))
    assert list(df.columns) == COLUMNS['noise_curve']
    assert len(df) == 4


def test_cli_curve(tmp_path, capsys):
    out = tmp_path / 'curve.csv'
    code = run.main(['curve', '--steps', '3', '--theta-a', 'pi/3', '--out', str(out)])
    assert code == 0
    df = pd.read_csv(out)
    assert list(df.columns) == COLUMNS['entanglement_curve']
    assert list(df['t']) == [1, 2, 3]
    assert 'EXPERIMENT: entanglement_curve' in capsys.readouterr().out


def test_cli_walk_with_moments(tmp_path):
    out = tmp_path / 'walk.json'
    code = run.main(['walk', '--steps', '10', '--moments', '--format', 'json', '--out', str(out)])
    assert code == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 21
    assert set(rows[0]) == {'x', 'probability'}
    moments = json.loads((tmp_path / 'walk_moments.json').read_text())
    assert [row['t'] for row in moments] == list(range(11))


def test_cli_config_file_with_flag_override(tmp_path):
    config_path = tmp_path / 'run.env'
    config_path.write_text('STEPS=9\nSPIN_A=plus\n')
    out = tmp_path / 'walk.csv'
    assert run.main(['walk', '--config', str(config_path), '--steps', '4', '--out', str(out)]) == 0
    assert len(pd.read_csv(out)) == 9


def test_cli_config_error_exit_code(tmp_path):
    assert run.main(['curve', '--steps', '0', '--out', str(tmp_path / 'x.csv')]) == 2
    assert run.main(['noise', '--steps', '3', '--out', str(tmp_path / 'x.csv')]) == 2
    assert run.main(['sweep', '--separation', '10', '--out', str(tmp_path / 'x.csv')]) == 2


def test_cli_unwritable_output_exit_code(tmp_path, caplog):
    blocker = tmp_path / 'blocker'
    blocker.write_text('not a directory')
    assert run.main(['curve', '--steps', '2', '--out', str(blocker / 'curve.csv')]) == 2
    assert 'Cannot write results' in caplog.text


def test_cli_numerical_failure_exit_code(tmp_path, monkeypatch):
    def fail(self):
        raise np.linalg.LinAlgError('eigenvalues did not converge')

    monkeypatch.setattr(experiment_runner.ExperimentRunner, 'run', fail)
    assert run.main(['curve', '--steps', '2', '--out', str(tmp_path / 'x.csv')]) == 3
