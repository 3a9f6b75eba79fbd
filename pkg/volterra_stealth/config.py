# -*- coding: utf-8 -*-
"""
Loading, validating and fingerprinting loop configurations.

Configurations are JSON documents checked against :data:`CONFIG_SCHEMA` with
``jsonschema`` before they are turned into a
:class:`~volterra_stealth.core.SystemConfig`.

Usage::

    >>> cfg = config_from_dict(PRESETS["ex1"])
    >>> cfg.q, cfg.attack.a, cfg.grid.n
    (2, 2, 10001)
    >>> config_hash(cfg) == config_hash(preset("ex1"))
    True
"""

import copy
import hashlib
import json
import logging
from dataclasses import fields

import jsonschema
from jsonschema.exceptions import best_match

from .core import (
    AttackSpec,
    ConfigError,
    DomainError,
    LtvStateSpace,
    PlantSpec,
    SystemConfig,
    TimeGrid,
    Tolerances,
)

logger = logging.getLogger(__name__)

_POLY = {"type": "array", "items": {"type": "number"}, "minItems": 1}

EXPRESSION_SCHEMA = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "object",
            "properties": {"poly": _POLY, "exp": _POLY},
            "additionalProperties": False,
            "minProperties": 1,
        },
    ]
}

_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": EXPRESSION_SCHEMA},
}

STATE_SPACE_SCHEMA = {
    "type": "object",
    "required": ["A", "B", "C"],
    "properties": {"A": _MATRIX, "B": _MATRIX, "C": _MATRIX},
    "additionalProperties": False,
}

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["plant", "controller", "q", "attack", "grid"],
    "additionalProperties": False,
    "properties": {
        "plant": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["unity"],
                    "properties": {"unity": {"const": True}},
                    "additionalProperties": False,
                },
                STATE_SPACE_SCHEMA,
            ]
        },
        "controller": STATE_SPACE_SCHEMA,
        "q": {"type": "integer", "minimum": 1},
        "attack": {
            "type": "object",
            "required": ["a", "h"],
            "properties": {
                "a": {"type": "integer", "minimum": 0},
                "h": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "required": ["t_end", "dt"],
            "properties": {"t_end": _POSITIVE, "dt": _POSITIVE},
            "additionalProperties": False,
        },
        "loop": {
            "type": "object",
            "properties": {"feedback_sign": {"enum": [1, -1]}},
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "decay_tol": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "nonneg_tol": {"type": "number", "minimum": 0},
                "sup_guard": _POSITIVE,
                "xval_tol": _POSITIVE,
                "decay_exponent": _POSITIVE,
                "growth_exponent": _POSITIVE,
                "singular_tol": _POSITIVE,
            },
            "additionalProperties": False,
        },
        "epsilon": _POSITIVE,
        "tail_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
}

PRESETS = {
    "ex1": {
        "plant": {"unity": True},
        "controller": {"A": [[{"poly": [0, 0, -1]}]], "B": [[1]], "C": [[1]]},
        "q": 2,
        "attack": {"a": 2, "h": 1.0},
        "grid": {"t_end": 10.0, "dt": 1e-3},
        "epsilon": 1.0,
    },
    "ex2": {
        "plant": {"unity": True},
        "controller": {"A": [[{"poly": [-0.5, 0, -3]}]], "B": [[1]], "C": [[-1]]},
        "q": 2,
        "attack": {"a": 1, "h": 0.1},
        "grid": {"t_end": 10.0, "dt": 1e-3},
        "epsilon": 3.0,
    },
}


def validate_config_dict(document):
    """Raise :class:`ConfigError` with the most relevant schema violation."""
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    error = best_match(validator.iter_errors(document))
    if error is not None:
        where = "/".join(str(p) for p in error.absolute_path) or "<root>"
        raise ConfigError("config {}: {}".format(where, error.message))


def config_from_dict(document):
    """
    Build a :class:`SystemConfig` from a JSON-like mapping.

    Usage::

        >>> doc = dict(PRESETS["ex1"])
        >>> del doc["q"]
        >>> config_from_dict(doc)
        Traceback (most recent call last):
        ...
        volterra_stealth.core.ConfigError: config <root>: 'q' is a required property
    """
    validate_config_dict(document)
    try:
        plant_doc = document["plant"]
        plant = (
            PlantSpec.unity()
            if plant_doc.get("unity")
            else PlantSpec(LtvStateSpace.from_arrays(**plant_doc))
        )
        controller = LtvStateSpace.from_arrays(**document["controller"])
        grid = TimeGrid(**document["grid"])
        config = SystemConfig(
            plant=plant,
            controller=controller,
            q=int(document["q"]),
            attack=AttackSpec(**document["attack"]),
            grid=grid,
            tolerances=Tolerances(**document.get("tolerances", {})),
            feedback_sign=document.get("loop", {}).get("feedback_sign", 1),
            epsilon=document.get("epsilon", 1.0),
            tail_fraction=document.get("tail_fraction", 0.2),
        )
    except DomainError as exception:
        raise ConfigError("config: {}".format(exception))
    logger.debug(
        "loaded config: q=%s a=%s n=%s plant=%s",
        config.q,
        config.attack.a,
        grid.n,
        "unity" if plant.is_unity else plant.state_space.representation,
    )
    return config


def config_to_dict(config):
    """Inverse of :func:`config_from_dict`."""
    defaults = Tolerances()
    tolerances = {
        f.name: getattr(config.tolerances, f.name)
        for f in fields(Tolerances)
        if getattr(config.tolerances, f.name) != getattr(defaults, f.name)
    }
    document = {
        "plant": (
            {"unity": True}
            if config.plant.is_unity
            else config.plant.state_space.to_json()
        ),
        "controller": config.controller.to_json(),
        "q": config.q,
        "attack": {"a": config.attack.a, "h": config.attack.h},
        "grid": {"t_end": float(config.grid.t_end), "dt": float(config.grid.dt)},
        "loop": {"feedback_sign": config.feedback_sign},
        "epsilon": float(config.epsilon),
        "tail_fraction": float(config.tail_fraction),
    }
    if tolerances:
        document["tolerances"] = tolerances
    return document


def config_hash(config):
    """SHA-256 of the canonical JSON form."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def read_document(path):
    try:
        with open(path) as handle:
            document = json.load(handle)
    except OSError as exception:
        raise ConfigError("cannot read config {}: {}".format(path, exception))
    except ValueError as exception:
        raise ConfigError("config {} is not valid JSON: {}".format(path, exception))
    logger.info("loaded %s", path)
    return document


def load_config(path):
    return config_from_dict(read_document(path))


def preset(name):
    """The named worked example as a :class:`SystemConfig`."""
    return config_from_dict(preset_dict(name))


def preset_dict(name):
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(
            "unknown preset {!r}; choose from {}".format(name, ", ".join(sorted(PRESETS)))
        )


def apply_overrides(document, t_end=None, dt=None, a=None, h=None, epsilon=None, feedback_sign=None):
    """
    Return a copy of ``document`` with command-line overrides applied.

    Usage::

        >>> doc = apply_overrides(PRESETS["ex1"], dt=0.01, a=1)
        >>> doc["grid"], doc["attack"]
        ({'t_end': 10.0, 'dt': 0.01}, {'a': 1, 'h': 1.0})
        >>> PRESETS["ex1"]["grid"]["dt"]
        0.001
    """
    document = copy.deepcopy(document)
    for section, key, value in (
        ("grid", "t_end", t_end),
        ("grid", "dt", dt),
        ("attack", "a", a),
        ("attack", "h", h),
        ("loop", "feedback_sign", feedback_sign),
    ):
        if value is not None:
            document.setdefault(section, {})[key] = value
    if epsilon is not None:
        document["epsilon"] = epsilon
    return document

