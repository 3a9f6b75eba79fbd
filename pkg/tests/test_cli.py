import csv
import json

import pytest

from volterra_stealth import __version__
from volterra_stealth.cli import main, stealth_class, summary_matrix
from volterra_stealth.config import PRESETS

SMALL = ['--t-end', '6', '--dt', '5e-3']


def _read_json(path):
    with open(str(path)) as handle:
        return json.load(handle)


def test_version(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(['--version'])
    assert excinfo.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_simulate_writes_outputs(tmpdir, capsys):
    assert main(['simulate', '--preset', 'ex1', '--t-end', '4', '--dt', '4e-3', '--out', str(tmpdir)]) == 0
    verdict = _read_json(tmpdir.join('verdict.json'))
    assert verdict['signal'] == 'u_q'
    assert verdict['grid']['n'] == 1001
    assert len(verdict['config_hash']) == 64
    assert verdict['u_c']['signal'] == 'u_c'
    assert verdict['growth_detected_at'] is None
    assert verdict['cross_validation']['passed'] is True
    with open(str(tmpdir.join('trajectories.csv'))) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['t', 'u_q', 'u_c', 'u_p', 'y_p', 'y_a']
    assert len(rows) == 1002
    assert 'epsilon-stealthy' in capsys.readouterr().out


def test_ex1_summary_line(tmpdir, capsys):
    assert main(['simulate', '--preset', 'ex1', '--lvie', 'never', '--out', str(tmpdir)]) == 0
    assert 'sup|u_q| = 0.73' in capsys.readouterr().out


def test_simulate_can_skip_the_cross_check(tmpdir):
    out = tmpdir.join('run')
    assert main(['simulate', '--preset', 'ex1', '--t-end', '2', '--lvie', 'never', '--out', str(out)]) == 0
    assert 'cross_validation' not in _read_json(out.join('verdict.json'))


def test_simulate_with_a_config_file(tmpdir):
    path = tmpdir.join('cfg.json')
    path.write(json.dumps({
        'plant': {'unity': True},
        'controller': {'A': [[-1]], 'B': [[1]], 'C': [[1]]},
        'q': 1,
        'attack': {'a': 0, 'h': 0.5},
        'grid': {'t_end': 3.0, 'dt': 0.01},
        'loop': {'feedback_sign': -1},
    }))
    assert main(['simulate', '--config', str(path), '--epsilon', '2', '--out', str(tmpdir)]) == 0
    verdict = _read_json(tmpdir.join('verdict.json'))
    assert verdict['epsilon'] == 2.0
    assert verdict['is_epsilon_stealthy'] is True


def test_check_ex1_passes(tmpdir, capsys):
    assert main(['check', '--preset', 'ex1', '--out', str(tmpdir)] + SMALL) == 0
    report = _read_json(tmpdir.join('conditions.json'))
    assert report['mode'] == 'raw'
    assert all(e['status'] != 'fail' for e in report['entries'])
    assert 'assumption1.c' in capsys.readouterr().out


def test_check_ex2_fails_in_raw_mode_only(tmpdir):
    assert main(['check', '--preset', 'ex2', '--out', str(tmpdir.join('raw'))] + SMALL) == 1
    raw = _read_json(tmpdir.join('raw', 'conditions.json'))
    failed = {e['name'] for e in raw['entries'] if e['status'] == 'fail'}
    assert {'nonneg.g_c', 'assumption1.c'} <= failed

    assert main(['check', '--preset', 'ex2', '--abs', '--out', str(tmpdir.join('abs'))] + SMALL) == 0
    assert _read_json(tmpdir.join('abs', 'conditions.json'))['mode'] == 'absolute'


def test_invalid_config_exits_2(tmpdir):
    path = tmpdir.join('bad.json')
    path.write(json.dumps({'q': 0}))
    assert main(['simulate', '--config', str(path), '--out', str(tmpdir)]) == 2


def test_missing_config_exits_2(tmpdir):
    assert main(['check', '--out', str(tmpdir)]) == 2


def test_oversized_grid_exits_2(tmpdir):
    assert main(['check', '--preset', 'ex1', '--t-end', '30', '--out', str(tmpdir)]) == 2


def test_unwritable_output_directory_exits_2(tmpdir, caplog):
    blocker = tmpdir.join('notadir')
    blocker.write('')
    out = str(blocker.join('run'))
    assert main(['simulate', '--preset', 'ex1', '--t-end', '1', '--out', out]) == 2
    assert 'cannot write output' in caplog.text


def test_truncated_run_still_writes_trajectories(tmpdir):
    path = tmpdir.join('guard.json')
    document = dict(PRESETS['ex1'], grid={'t_end': 2.0, 'dt': 0.05}, tolerances={'sup_guard': 1e-3})
    path.write(json.dumps(document))
    out = tmpdir.join('run')
    assert main(['simulate', '--config', str(path), '--lvie', 'never', '--out', str(out)]) == 3
    with open(str(out.join('trajectories.csv'))) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['t', 'u_q', 'u_c', 'u_p', 'y_p', 'y_a']
    assert 2 < len(rows) < 10
    assert not out.join('verdict.json').check()


def test_bad_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(['simulate', '--preset', 'ex1', '--feedback-sign', '3'])
    assert excinfo.value.code == 2


def test_sweep_classifies_attack_degrees(tmpdir, capsys):
    code = main(['sweep', '--preset', 'ex1', '--a-values', '0', '1', '2', '3', '--h-values', '1',
                 '--epsilon', '5', '--out', str(tmpdir)])
    assert code == 0
    with open(str(tmpdir.join('sweep.csv'))) as handle:
        rows = list(csv.DictReader(handle))
    assert [r['stealth_class'] for r in rows] == ['untraceable', 'untraceable', 'eps-stealthy', 'unbounded']
    assert rows[0]['growth_detected_at'] == ''
    assert 'eps-stealthy' in capsys.readouterr().out


def test_sweep_is_linear_in_the_weight(tmpdir):
    code = main(['sweep', '--preset', 'ex1', '--a-values', '1', '--h-values', '0.5', '1', '2',
                 '--t-end', '4', '--jobs', '2', '--out', str(tmpdir)])
    assert code == 0
    with open(str(tmpdir.join('sweep.csv'))) as handle:
        sups = [float(r['sup_uq']) for r in csv.DictReader(handle)]
    assert sups[1] == pytest.approx(2 * sups[0], rel=1e-12)
    assert sups[2] == pytest.approx(2 * sups[1], rel=1e-12)


def test_sweep_reads_a_file(tmpdir):
    path = tmpdir.join('sweep.json')
    path.write(json.dumps({'a': [0], 'h': [1.0], 'q': [1, 2]}))
    assert main(['sweep', '--preset', 'ex1', '--sweep', str(path), '--t-end', '2', '--out', str(tmpdir)]) == 0
    with open(str(tmpdir.join('sweep.csv'))) as handle:
        assert [r['q'] for r in csv.DictReader(handle)] == ['1', '2']


def test_sweep_rejects_bad_input(tmpdir):
    assert main(['sweep', '--preset', 'ex1', '--h-values', '1', '--out', str(tmpdir)]) == 2
    assert main(['sweep', '--preset', 'ex1', '--a-values', '1', '--h-values', '1', '--jobs', '0',
                 '--out', str(tmpdir)]) == 2


def test_stealth_class_precedence():
    row = {'is_untraceable': False, 'tail_trend': 'plateau', 'growth_detected_at': 3.0,
           'is_epsilon_stealthy': True}
    assert stealth_class(row) == 'unbounded'
    row.update(growth_detected_at=None)
    assert stealth_class(row) == 'eps-stealthy'
    row.update(is_epsilon_stealthy=False)
    assert stealth_class(row) == 'not-stealthy'


def test_summary_matrix():
    rows = [
        {'a': 0, 'q': 1, 'stealth_class': 'untraceable'},
        {'a': 0, 'q': 1, 'stealth_class': 'eps-stealthy'},
        {'a': 1, 'q': 1, 'stealth_class': 'unbounded'},
    ]
    lines = summary_matrix(rows).splitlines()
    assert len(lines) == 3
    assert 'untraceable/eps-stealthy' in lines[1]
    assert lines[2].split()[-1] == 'unbounded'


def test_missing_field_is_named(tmpdir, caplog):
    document = {
        'plant': {'unity': True},
        'controller': {'A': [[-1]], 'B': [[1]], 'C': [[1]]},
        'attack': {'a': 0, 'h': 1.0},
        'grid': {'t_end': 1.0, 'dt': 0.01},
    }
    path = tmpdir.join('no_q.json')
    path.write(json.dumps(document))
    assert main(['simulate', '--config', str(path), '--out', str(tmpdir)]) == 2
    assert "'q' is a required property" in caplog.text


def test_preset_runs_are_reproducible(tmpdir):
    for name in ('a', 'b'):
        assert main(['simulate', '--preset', 'ex2', '--t-end', '3', '--lvie', 'never',
                     '--out', str(tmpdir.join(name))]) == 0
    first = tmpdir.join('a', 'trajectories.csv').read()
    assert first == tmpdir.join('b', 'trajectories.csv').read()
    hashes = {_read_json(tmpdir.join(name, 'verdict.json'))['config_hash'] for name in ('a', 'b')}
    assert len(hashes) == 1
