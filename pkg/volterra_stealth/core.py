# -*- coding: utf-8 -*-
"""
Grids, sampled signals, coefficient functions and the tail diagnostics every
other module builds on.

Usage::

    >>> from volterra_stealth.core import TimeGrid, Signal, sup_norm
    >>> grid = TimeGrid(t_end=1.0, dt=0.25)
    >>> grid.n
    5
    >>> sup_norm(Signal(grid, [0.0, -2.0, 1.0, 0.5, 0.0]))
    2.0
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial

logger = logging.getLogger(__name__)


class VolterraStealthError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(VolterraStealthError):
    """A configuration document is malformed or inconsistent."""


class DomainError(VolterraStealthError, ValueError):
    """An argument lies outside the range an operation accepts."""


class GridMismatchError(DomainError):
    """Two objects sampled on different grids were combined."""


class NumericalError(VolterraStealthError):
    """A computation produced non-finite values or could not proceed."""


def _readonly(array):
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform grid ``t_i = i*dt`` for ``i = 0..n-1`` with ``n = floor(t_end/dt) + 1``.

    Usage::

        >>> grid = TimeGrid(t_end=10.0, dt=1e-3)
        >>> grid.n
        10001
        >>> float(grid.nodes[-1])
        10.0
        >>> grid.index_of(2.5)
        2500
    """

    t_end: float
    dt: float

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError("dt must be positive, got {!r}".format(self.dt))
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise DomainError("t_end must be positive, got {!r}".format(self.t_end))
        if self.n < 2:
            raise DomainError(
                "grid needs at least two nodes (t_end={}, dt={})".format(
                    self.t_end, self.dt
                )
            )

    @property
    def n(self):
        return int(math.floor(self.t_end / self.dt + 1e-9)) + 1

    @property
    def horizon(self):
        """Last node, which may fall short of ``t_end`` by less than ``dt``."""
        return (self.n - 1) * self.dt

    @cached_property
    def nodes(self):
        return _readonly(np.arange(self.n) * self.dt)

    def index_of(self, t):
        """Nearest node index of time ``t``; ``t`` must lie on the horizon."""
        if t < -0.5 * self.dt or t > self.horizon + 0.5 * self.dt:
            raise DomainError(
                "t={} lies outside [0, {}]".format(t, self.horizon)
            )
        return min(int(round(t / self.dt)), self.n - 1)

    def refined(self):
        """The same horizon with half the step."""
        return TimeGrid(t_end=self.horizon, dt=self.dt / 2.0)

    def truncated(self, n):
        """The first ``n`` nodes of this grid."""
        if not 2 <= n <= self.n:
            raise DomainError("cannot truncate a {}-node grid to {}".format(self.n, n))
        return TimeGrid(t_end=(n - 1) * self.dt, dt=self.dt)

    def same_as(self, other):
        return self.n == other.n and math.isclose(self.dt, other.dt, rel_tol=1e-12)


def ensure_same_grid(*sampled):
    """Raise :class:`GridMismatchError` unless every argument shares one grid."""
    first = sampled[0].grid
    for other in sampled[1:]:
        if not first.same_as(other.grid):
            raise GridMismatchError(
                "grid mismatch: n={} dt={} vs n={} dt={}".format(
                    first.n, first.dt, other.grid.n, other.grid.dt
                )
            )
    return first


@dataclass(frozen=True)
class Signal:
    """
    Real samples of a scalar signal on a :class:`TimeGrid`.

    Usage::

        >>> grid = TimeGrid(t_end=1.0, dt=0.5)
        >>> s = Signal(grid, [1.0, -1.0, 3.0])
        >>> s.abs().values.tolist()
        [1.0, 1.0, 3.0]
        >>> s.scale(2.0).values.tolist()
        [2.0, -2.0, 6.0]
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise GridMismatchError(
                "signal has shape {} but the grid has {} nodes".format(
                    values.shape, self.grid.n
                )
            )
        if not np.all(np.isfinite(values)):
            raise NumericalError("signal contains non-finite samples")
        object.__setattr__(self, "values", _readonly(values))

    def __len__(self):
        return self.grid.n

    @property
    def times(self):
        return self.grid.nodes

    def abs(self):
        return Signal(self.grid, np.abs(self.values))

    def scale(self, c):
        return Signal(self.grid, c * self.values)

    def segment(self, t0, t1):
        """Times and samples on ``[t0, t1]``."""
        if t1 < t0:
            raise DomainError("segment bounds out of order: {} > {}".format(t0, t1))
        i0, i1 = self.grid.index_of(t0), self.grid.index_of(t1)
        return self.times[i0 : i1 + 1], self.values[i0 : i1 + 1]

    def truncated(self, n):
        return Signal(self.grid.truncated(n), self.values[:n])


def sup_norm(signal):
    return float(np.max(np.abs(signal.values)))


@dataclass(frozen=True)
class Tolerances:
    """Thresholds shared by the verdicts and condition checks."""

    decay_tol: Optional[float] = None
    nonneg_tol: float = 1e-12
    sup_guard: float = 1e12
    xval_tol: float = 5e-3
    decay_exponent: float = 0.2
    growth_exponent: float = 0.5
    singular_tol: float = 1e-12

    def decay_threshold(self, reference):
        """Absolute decay threshold given the overall sup-norm ``reference``."""
        if self.decay_tol is not None:
            return self.decay_tol
        return max(1e-3 * reference, 1e-9)


TAIL_WINDOWS = 4


@dataclass(frozen=True)
class TailTrend:
    window_maxima: Tuple[float, ...]
    tail_max: float
    rate: float
    non_increasing: bool
    trend: str

    @property
    def is_decaying(self):
        return self.trend == "decaying"


def tail_trend(times, values, start, tolerances=None, reference=None):
    """
    Classify the behaviour of ``|values|`` over ``times >= start``.

    The tail is split into four windows. ``rate`` is the slope of the window
    maxima against the window centres on log-log axes. The tail is
    ``decaying`` when the maxima never increase and either the tail maximum is
    below the decay threshold or the rate is at most ``-decay_exponent``; it
    is ``growing`` when the rate reaches ``growth_exponent``; otherwise it is a
    ``plateau``.

    Usage::

        >>> import numpy as np
        >>> t = np.linspace(0.0, 20.0, 2001)
        >>> tail_trend(t, np.exp(-t), 16.0).trend
        'decaying'
        >>> tail_trend(t, np.ones_like(t), 16.0).trend
        'plateau'
        >>> tail_trend(t, t, 16.0).trend
        'growing'
    """
    tolerances = tolerances or Tolerances()
    times = np.asarray(times, dtype=float)
    magnitude = np.abs(np.asarray(values, dtype=float))
    mask = times >= start - 1e-12
    windows = np.array_split(np.flatnonzero(mask), TAIL_WINDOWS)
    if any(len(w) < 2 for w in windows):
        raise NumericalError(
            "insufficient horizon: the tail from t={} holds {} nodes".format(
                start, int(mask.sum())
            )
        )
    maxima = np.array([magnitude[w].max() for w in windows])
    centres = np.array([times[w].mean() for w in windows])
    tiny = np.finfo(float).tiny
    rate = float(
        polynomial.polyfit(np.log(centres), np.log(np.maximum(maxima, tiny)), 1)[1]
    )
    if not maxima.any():
        rate = 0.0
    non_increasing = bool(np.all(np.diff(maxima) <= 0))
    if reference is None:
        reference = float(magnitude.max())
    tail_max = float(magnitude[mask].max())
    small = tail_max < tolerances.decay_threshold(reference)
    if non_increasing and (small or rate <= -tolerances.decay_exponent):
        trend = "decaying"
    elif rate >= tolerances.growth_exponent:
        trend = "growing"
    else:
        trend = "plateau"
    logger.debug(
        "tail from t=%s: maxima=%s rate=%.3f trend=%s", start, maxima, rate, trend
    )
    return TailTrend(tuple(float(m) for m in maxima), tail_max, rate, non_increasing, trend)


@dataclass(frozen=True)
class DecayMetric:
    tail_max: float
    is_decaying: bool
    decay_rate: float
    trend: str
    window_maxima: Tuple[float, ...]


def decay_metric(signal, tail_fraction=0.2, tolerances=None):
    """
    Tail diagnostics of a signal over the final ``tail_fraction`` of its
    horizon.

    Usage::

        >>> import numpy as np
        >>> grid = TimeGrid(t_end=20.0, dt=0.01)
        >>> decay_metric(Signal(grid, np.exp(-grid.nodes))).is_decaying
        True
        >>> decay_metric(Signal(grid, np.ones(grid.n))).is_decaying
        False
    """
    if not 0 < tail_fraction < 1:
        raise DomainError("tail_fraction must lie in (0, 1), got {}".format(tail_fraction))
    start = (1.0 - tail_fraction) * signal.grid.horizon
    trend = tail_trend(signal.times, signal.values, start, tolerances, sup_norm(signal))
    return DecayMetric(
        tail_max=trend.tail_max,
        is_decaying=trend.is_decaying,
        decay_rate=trend.rate,
        trend=trend.trend,
        window_maxima=trend.window_maxima,
    )


_KIND_ORDER = ("constant", "polynomial", "expression")


@dataclass(frozen=True)
class Coefficient:
    """
    A scalar function of time: ``poly(t) * exp(expo(t))`` where both factors
    are polynomials given by ascending coefficients. An empty ``expo`` means
    no exponential factor.

    Usage::

        >>> c = Coefficient(poly=(0.0, 0.0, -1.0))
        >>> float(c(2.0))
        -4.0
        >>> c.kind
        'polynomial'
        >>> Coefficient.from_json({"exp": [0.0, -1.0]}).kind
        'expression'
    """

    poly: Tuple[float, ...] = (0.0,)
    expo: Tuple[float, ...] = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        value = polynomial.polyval(t, self.poly)
        if self.expo:
            value = value * np.exp(polynomial.polyval(t, self.expo))
        return np.broadcast_to(value, t.shape) if np.ndim(value) < t.ndim else value

    @property
    def kind(self):
        if self.expo:
            return "expression"
        return "constant" if len(self.poly) == 1 else "polynomial"

    @classmethod
    def constant(cls, value):
        return cls(poly=(float(value),))

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, bool):
            raise ConfigError("coefficient must be a number or an object, got a bool")
        if isinstance(obj, (int, float)):
            return cls.constant(obj)
        if isinstance(obj, cls):
            return obj
        if not isinstance(obj, dict) or not obj or set(obj) - {"poly", "exp"}:
            raise ConfigError("cannot read a coefficient from {!r}".format(obj))
        poly = tuple(float(c) for c in obj.get("poly", (1.0,)))
        expo = tuple(float(c) for c in obj.get("exp", ()))
        if not poly:
            raise ConfigError("'poly' needs at least one coefficient")
        return cls(poly=poly, expo=expo)

    def to_json(self):
        if self.kind == "constant":
            return self.poly[0]
        obj = {}
        if self.poly != (1.0,) or not self.expo:
            obj["poly"] = list(self.poly)
        if self.expo:
            obj["exp"] = list(self.expo)
        return obj


@dataclass(frozen=True)
class CoefficientMatrix:
    """Matrix of :class:`Coefficient` entries, evaluated as ``M(t)``."""

    entries: Tuple[Tuple[Coefficient, ...], ...]

    def __post_init__(self):
        widths = {len(row) for row in self.entries}
        if not self.entries or len(widths) != 1 or 0 in widths:
            raise DomainError("coefficient matrix rows must be non-empty and equal length")

    @property
    def shape(self):
        return len(self.entries), len(self.entries[0])

    def __call__(self, t):
        """``(rows, cols)`` for scalar ``t``; ``(len(t), rows, cols)`` for arrays."""
        t = np.asarray(t, dtype=float)
        stacked = np.array(
            [[np.broadcast_to(e(t), t.shape) for e in row] for row in self.entries]
        )
        return np.moveaxis(stacked, (0, 1), (-2, -1)) if t.ndim else stacked

    @property
    def kind(self):
        kinds = [e.kind for row in self.entries for e in row]
        return max(kinds, key=_KIND_ORDER.index)

    @classmethod
    def from_json(cls, rows):
        try:
            return cls(tuple(tuple(Coefficient.from_json(e) for e in row) for row in rows))
        except TypeError:
            raise ConfigError("a coefficient matrix must be a list of rows")

    def to_json(self):
        return [[e.to_json() for e in row] for row in self.entries]


@dataclass(frozen=True)
class LtvStateSpace:
    """
    Single-input single-output realization ``x' = A(t)x + B(t)u``,
    ``y = C(t)x``.

    Usage::

        >>> ss = LtvStateSpace.from_arrays([[{"poly": [0, 0, -1]}]], [[1]], [[1]])
        >>> ss.n_states, ss.representation
        (1, 'polynomial')
        >>> float(ss.A(3.0)[0, 0])
        -9.0
    """

    A: CoefficientMatrix
    B: CoefficientMatrix
    C: CoefficientMatrix

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DomainError("A must be square, got shape {}".format(self.A.shape))
        if self.B.shape != (n, 1):
            raise DomainError("B must be {}x1, got shape {}".format(n, self.B.shape))
        if self.C.shape != (1, n):
            raise DomainError("C must be 1x{}, got shape {}".format(n, self.C.shape))

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def representation(self):
        kinds = [self.A.kind, self.B.kind, self.C.kind]
        return max(kinds, key=_KIND_ORDER.index)

    @classmethod
    def from_arrays(cls, A, B, C):
        return cls(
            CoefficientMatrix.from_json(A),
            CoefficientMatrix.from_json(B),
            CoefficientMatrix.from_json(C),
        )

    def to_json(self):
        return {"A": self.A.to_json(), "B": self.B.to_json(), "C": self.C.to_json()}

    def check_finite(self, grid):
        for name in "ABC":
            if not np.all(np.isfinite(getattr(self, name)(grid.nodes))):
                raise NumericalError(
                    "{} evaluates to non-finite values on [0, {}]".format(
                        name, grid.horizon
                    )
                )


@dataclass(frozen=True)
class PlantSpec:
    """A plant realization, or ``None`` for the unity (identity) plant."""

    state_space: Optional[LtvStateSpace] = None

    @property
    def is_unity(self):
        return self.state_space is None

    @classmethod
    def unity(cls):
        return cls(None)


@dataclass(frozen=True)
class AttackSpec:
    """Attack ``y_a(t) = h t^a / a!``."""

    a: int
    h: float

    def __post_init__(self):
        if isinstance(self.a, bool) or int(self.a) != self.a or self.a < 0:
            raise DomainError("attack degree must be a non-negative integer, got {!r}".format(self.a))
        if not math.isfinite(self.h):
            raise DomainError("attack weight must be finite")
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "h", float(self.h))


@dataclass(frozen=True)
class SystemConfig:
    plant: PlantSpec
    controller: LtvStateSpace
    q: int
    attack: AttackSpec
    grid: TimeGrid
    tolerances: Tolerances = Tolerances()
    feedback_sign: int = 1
    epsilon: float = 1.0
    tail_fraction: float = 0.2

    def __post_init__(self):
        if isinstance(self.q, bool) or int(self.q) != self.q or self.q < 1:
            raise DomainError("q must be an integer >= 1, got {!r}".format(self.q))
        if self.feedback_sign not in (1, -1):
            raise DomainError("feedback_sign must be 1 or -1, got {!r}".format(self.feedback_sign))
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive, got {!r}".format(self.epsilon))
        if not 0 < self.tail_fraction < 1:
            raise DomainError("tail_fraction must lie in (0, 1)")

    def with_changes(self, **changes):
        return replace(self, **changes)

    def with_grid(self, t_end=None, dt=None):
        return replace(
            self,
            grid=TimeGrid(
                t_end=self.grid.t_end if t_end is None else t_end,
                dt=self.grid.dt if dt is None else dt,
            ),
        )

