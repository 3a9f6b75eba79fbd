# -*- coding: utf-8 -*-
"""
volterra-stealth
================

Stealthy polynomial false-data injection attacks on linear time-varying
feedback loops with integrator chains, analysed through second-kind linear
Volterra integral equations.

.. code:: python

    from volterra_stealth import preset, simulate, stealth_verdict

    config = preset("ex1")
    trajectories = simulate(config)
    verdict = stealth_verdict(trajectories.u_q, epsilon=1.0)

Modules
-------
* :mod:`volterra_stealth.core` - grids, signals, coefficient functions, errors
* :mod:`volterra_stealth.config` - JSON configuration, presets, hashing
* :mod:`volterra_stealth.stm` - transition matrices and impulse-response kernels
* :mod:`volterra_stealth.lvie` - trapezoid solver and kernel algebra
* :mod:`volterra_stealth.attack` - attack signals and stealth verdicts
* :mod:`volterra_stealth.closedloop` - loop simulation and cross-validation
* :mod:`volterra_stealth.conditions` - kernel condition checks
* :mod:`volterra_stealth.handlers` - command decorators and exit codes
* :mod:`volterra_stealth.cli` - the ``volterra-stealth`` command
"""

__version__ = "0.1.0"

from .attack import attack_signal, forcing_term, stealth_verdict  # noqa: E402
from .closedloop import build_kernels, cross_validate, simulate, uq_via_lvie  # noqa: E402
from .conditions import run_checks  # noqa: E402
from .config import config_from_dict, load_config, preset  # noqa: E402
from .core import (  # noqa: E402
    ConfigError,
    DomainError,
    GridMismatchError,
    NumericalError,
    Signal,
    TimeGrid,
    VolterraStealthError,
)
from .lvie import solve_lvie  # noqa: E402
