import argparse
import json

import pytest
from mock import MagicMock, call

from volterra_stealth import handlers
from volterra_stealth.core import ConfigError, DomainError, NumericalError


def test_multiple_command_decorator_subclasses():
    mock = MagicMock()
    class first(handlers.CommandDecorator):
        def before(self, args):
            mock('first')
            return args
    class second(handlers.CommandDecorator):
        def before(self, args):
            mock('second')
            return args

    @first
    @second
    def command(args):
        return 'done'

    assert command({}) == 'done'
    assert mock.mock_calls == [call('first'), call('second')]


def test_after_runs_outermost_last():
    seen = []

    @handlers.after(lambda retval: seen.append('outer') or retval)
    @handlers.after(lambda retval: seen.append('inner') or retval)
    def command(args):
        return 7

    assert command({}) == 7
    assert seen == ['inner', 'outer']


def test_decorator_keeps_the_wrapped_name():
    @handlers.exit_codes
    def cmd_demo(args):
        pass

    assert cmd_demo.__name__ == 'cmd_demo'


@pytest.mark.parametrize('exception, code', [
    (ConfigError('bad key'), handlers.EXIT_USAGE),
    (DomainError('dt must be positive'), handlers.EXIT_USAGE),
    (NumericalError('singular step'), handlers.EXIT_NUMERICAL),
    (NotADirectoryError(20, 'Not a directory'), handlers.EXIT_USAGE),
])
def test_exit_codes_map_errors(exception, code):
    @handlers.exit_codes
    def command(args):
        raise exception

    assert command({}) == code


def test_exit_codes_success_and_explicit_code():
    assert handlers.exit_codes(lambda args: None)({}) == handlers.EXIT_OK
    assert handlers.exit_codes(lambda args: 1)({}) == handlers.EXIT_CONDITION_FAILED


def test_exit_codes_reraise_foreign_errors():
    @handlers.exit_codes
    def command(args):
        raise KeyError('not ours')

    with pytest.raises(KeyError):
        command({})


def test_exit_codes_logs_the_error(caplog):
    @handlers.exit_codes
    def command(args):
        raise ConfigError('config grid: dt missing')

    command({})
    assert 'config grid: dt missing' in caplog.text


def _namespace(**kwargs):
    defaults = dict(preset=None, config=None, t_end=None, dt=None, attack_degree=None,
                    attack_weight=None, epsilon=None, feedback_sign=None)
    defaults.update(kwargs)
    return argparse.Namespace(**defaults)


def test_resolve_config_applies_overrides():
    @handlers.resolve_config
    def command(args):
        return args.system

    system = command(_namespace(preset='ex1', dt=0.01, attack_degree=1, feedback_sign=-1))
    assert system.grid.dt == 0.01
    assert system.attack.a == 1
    assert system.feedback_sign == -1
    assert system.q == 2


def test_resolve_config_reads_files(tmpdir):
    path = tmpdir.join('cfg.json')
    document = {
        'plant': {'unity': True},
        'controller': {'A': [[-1]], 'B': [[1]], 'C': [[1]]},
        'q': 1,
        'attack': {'a': 0, 'h': 2.0},
        'grid': {'t_end': 1.0, 'dt': 0.1},
    }
    path.write(json.dumps(document))

    @handlers.exit_codes
    @handlers.resolve_config
    def command(args):
        return 0 if args.system.attack.h == 2.0 else 1

    assert command(_namespace(config=str(path))) == 0


def test_resolve_config_requires_a_source():
    @handlers.exit_codes
    @handlers.resolve_config
    def command(args):
        return 0

    assert command(_namespace()) == handlers.EXIT_USAGE


def test_write_json(tmpdir):
    path = str(tmpdir.join('out.json'))
    handlers.write_json(path, {'b': 1, 'a': [1.5]})
    with open(path) as handle:
        assert json.load(handle) == {'a': [1.5], 'b': 1}
