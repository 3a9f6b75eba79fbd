import json

import pytest

from volterra_stealth import config
from volterra_stealth.core import ConfigError


def _document(**changes):
    document = config.preset_dict('ex1')
    document.update(changes)
    return document


def test_presets_load():
    ex1 = config.preset('ex1')
    assert ex1.q == 2
    assert ex1.attack.a == 2 and ex1.attack.h == 1.0
    assert ex1.grid.n == 10001
    assert ex1.epsilon == 1.0
    assert ex1.plant.is_unity
    assert float(ex1.controller.A(2.0)[0, 0]) == -4.0

    ex2 = config.preset('ex2')
    assert float(ex2.controller.A(1.0)[0, 0]) == -3.5
    assert float(ex2.controller.C(0.0)[0, 0]) == -1.0
    assert ex2.attack.h == 0.1
    assert ex2.epsilon == 3.0


def test_unknown_preset():
    with pytest.raises(ConfigError) as excinfo:
        config.preset('ex3')
    assert 'ex1, ex2' in str(excinfo.value)


def test_schema_error_names_the_path():
    with pytest.raises(ConfigError) as excinfo:
        config.config_from_dict(_document(attack={'a': -1, 'h': 1.0}))
    assert str(excinfo.value).startswith('config attack/a:')


def test_schema_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        config.config_from_dict(_document(extra=1))


def test_schema_rejects_zero_dt():
    with pytest.raises(ConfigError):
        config.config_from_dict(_document(grid={'t_end': 1.0, 'dt': 0}))


def test_dimension_errors_become_config_errors():
    controller = {'A': [[-1, 0], [0, -1]], 'B': [[1]], 'C': [[1, 0]]}
    with pytest.raises(ConfigError) as excinfo:
        config.config_from_dict(_document(controller=controller))
    assert 'B must be 2x1' in str(excinfo.value)


def test_round_trip_keeps_the_hash():
    original = config.config_from_dict(_document(
        tolerances={'xval_tol': 0.01},
        loop={'feedback_sign': -1},
        controller={'A': [[{'poly': [0, -1], 'exp': [0, -0.5]}]], 'B': [[1]], 'C': [[2]]},
    ))
    document = config.config_to_dict(original)
    assert document['tolerances'] == {'xval_tol': 0.01}
    rebuilt = config.config_from_dict(document)
    assert config.config_hash(rebuilt) == config.config_hash(original)


def test_hash_changes_with_the_attack():
    base = config.preset('ex1')
    other = base.with_changes(attack=type(base.attack)(a=3, h=1.0))
    assert config.config_hash(base) != config.config_hash(other)
    assert len(config.config_hash(base)) == 64


def test_overrides_do_not_touch_the_preset():
    document = config.apply_overrides(config.PRESETS['ex2'], t_end=4.0, epsilon=0.5, feedback_sign=-1)
    assert document['grid'] == {'t_end': 4.0, 'dt': 1e-3}
    assert document['epsilon'] == 0.5
    assert document['loop'] == {'feedback_sign': -1}
    assert 'loop' not in config.PRESETS['ex2']


def test_load_config(tmpdir):
    path = tmpdir.join('ex1.json')
    path.write(json.dumps(config.PRESETS['ex1']))
    assert config.config_hash(config.load_config(str(path))) == config.config_hash(config.preset('ex1'))


def test_load_config_invalid_json(tmpdir):
    path = tmpdir.join('broken.json')
    path.write('{"q": 2,')
    with pytest.raises(ConfigError) as excinfo:
        config.load_config(str(path))
    assert 'not valid JSON' in str(excinfo.value)


def test_load_config_missing_file(tmpdir):
    with pytest.raises(ConfigError):
        config.load_config(str(tmpdir.join('nope.json')))


@pytest.mark.parametrize('name', sorted(config.PRESETS))
def test_presets_satisfy_the_schema(name):
    config.validate_config_dict(config.PRESETS[name])


def test_missing_grid_fails_validation():
    document = _document()
    del document['grid']
    with pytest.raises(ConfigError) as excinfo:
        config.validate_config_dict(document)
    assert "'grid' is a required property" in str(excinfo.value)
