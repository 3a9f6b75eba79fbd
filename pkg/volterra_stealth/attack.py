# -*- coding: utf-8 -*-
"""
Polynomial false-data injection attacks, their forcing terms and the
stealth verdicts computed from the resulting integrator input ``u_q``.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np

from .core import DomainError, Signal, decay_metric, sup_norm
from .lvie import moment_rows

logger = logging.getLogger(__name__)


def attack_signal(spec, grid):
    """
    ``y_a(t) = h t^a / a!`` sampled on ``grid``.

    Usage::

        >>> from volterra_stealth.core import AttackSpec, TimeGrid
        >>> y = attack_signal(AttackSpec(a=2, h=1.0), TimeGrid(10.0, 1e-3))
        >>> float(y.values[-1])
        50.0
    """
    return Signal(grid, attack_values(spec, grid.nodes))


def attack_values(spec, times):
    return spec.h * (np.power(times, spec.a) / math.factorial(spec.a))


def forcing_term(g_c, spec):
    """
    ``phi(t) = (h / a!) integral_0^t g_c(t, tau) tau^a dtau``, the forcing of the
    ``u_q`` equation.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import AttackSpec, TimeGrid
        >>> from volterra_stealth.stm import KernelTable
        >>> grid = TimeGrid(2.0, 0.5)
        >>> phi = forcing_term(KernelTable(grid, np.ones((5, 5))), AttackSpec(0, 2.0))
        >>> phi.values.tolist()
        [0.0, 1.0, 2.0, 3.0, 4.0]
    """
    moments = moment_rows(g_c, spec.a)
    return Signal(g_c.grid, spec.h * (moments / math.factorial(spec.a)))


@dataclass(frozen=True)
class WeightBound:
    value: float
    unbounded: bool


def admissible_weight(M, a, delta):
    """
    Largest attack weight ``|h|`` with ``|h M| / a! <= delta``, where ``M``
    bounds the forcing moment and may have either sign.

    Usage::

        >>> admissible_weight(1.0, 0, 0.5)
        WeightBound(value=0.5, unbounded=False)
        >>> admissible_weight(-2.0, 2, 1.0)
        WeightBound(value=1.0, unbounded=False)
        >>> admissible_weight(0.0, 3, 0.5).unbounded
        True
    """
    if not delta > 0:
        raise DomainError("delta must be positive, got {}".format(delta))
    if a < 0:
        raise DomainError("attack degree must be non-negative, got {}".format(a))
    if M == 0:
        return WeightBound(math.inf, True)
    return WeightBound(delta * math.factorial(int(a)) / abs(M), False)


@dataclass(frozen=True)
class StealthVerdict:
    signal: str
    sup: float
    epsilon: float
    is_epsilon_stealthy: bool
    tail_max: float
    is_untraceable: bool
    decay_rate: float
    trend: str
    window_maxima: Tuple[float, ...]
    horizon_limited: bool = True


def stealth_verdict(u, epsilon, tail_fraction=0.2, tolerances=None, signal="u_q"):
    """
    Finite-horizon stealth verdict for a sampled signal.

    ``is_epsilon_stealthy`` is ``sup|u| <= epsilon``; ``is_untraceable``
    additionally requires a decaying tail.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import Signal, TimeGrid
        >>> grid = TimeGrid(20.0, 0.01)
        >>> v = stealth_verdict(Signal(grid, 0.3 * np.exp(-grid.nodes)), 0.4)
        >>> v.is_epsilon_stealthy, v.is_untraceable
        (True, True)
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive, got {}".format(epsilon))
    sup = sup_norm(u)
    metric = decay_metric(u, tail_fraction, tolerances)
    stealthy = sup <= epsilon
    verdict = StealthVerdict(
        signal=signal,
        sup=sup,
        epsilon=float(epsilon),
        is_epsilon_stealthy=stealthy,
        tail_max=metric.tail_max,
        is_untraceable=stealthy and metric.is_decaying,
        decay_rate=metric.decay_rate,
        trend=metric.trend,
        window_maxima=metric.window_maxima,
    )
    logger.info(
        "%s: sup=%.6g epsilon=%s stealthy=%s trend=%s",
        signal,
        sup,
        epsilon,
        stealthy,
        metric.trend,
    )
    return verdict


def verdict_to_dict(verdict, grid, config_hash=None):
    """JSON-ready view of a verdict with the grid it was computed on."""
    payload = asdict(verdict)
    payload["window_maxima"] = list(verdict.window_maxima)
    payload["grid"] = {"t_end": grid.t_end, "dt": grid.dt, "n": grid.n}
    if config_hash is not None:
        payload["config_hash"] = config_hash
    return payload
