# -*- coding: utf-8 -*-
"""
Finite-horizon checks of the kernel conditions behind the stealth results.

Every check reduces a statement about ``t -> infinity`` or ``T -> 0+`` to a
trend over the sampled horizon and returns ``pass``, ``fail`` or
``indeterminate``. :func:`run_checks` gathers them in a
:class:`ConditionReport`.

In absolute mode all checks run on ``|G|``. A pass is then sufficient for
stability and a fail says nothing, so failures are reported as
indeterminate.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial
from scipy.special import comb

from .closedloop import build_kernels
from .core import DomainError, Tolerances, tail_trend
from .lvie import compose_kernels, moment_integral, moment_rows, row_integrals

logger = logging.getLogger(__name__)

MAX_ITERATION_NODES = 3000
STABLE_FRACTION = 0.99


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INDETERMINATE = "indeterminate"


@dataclass
class ConditionEntry:
    name: str
    status: Status
    witness: Dict[str, object] = field(default_factory=dict)
    parameters: Dict[str, object] = field(default_factory=dict)
    reason: Optional[str] = None

    def __post_init__(self):
        self.status = Status(self.status)
        if self.status is Status.INDETERMINATE and not self.reason:
            raise DomainError("indeterminate entry {!r} needs a reason".format(self.name))

    def to_dict(self):
        payload = {
            "name": self.name,
            "status": self.status.value,
            "witness": self.witness,
            "parameters": self.parameters,
        }
        if self.reason:
            payload["reason"] = self.reason
        return payload


@dataclass
class ConditionReport:
    """
    Ordered condition entries, each name appearing once.

    Usage::

        >>> report = ConditionReport(absolute=True)
        >>> report.add(ConditionEntry("demo", "fail"))
        >>> report.get("demo").status.value, report.failed
        ('indeterminate', [])
    """

    absolute: bool = False
    entries: List[ConditionEntry] = field(default_factory=list)
    horizon_limited = True

    def add(self, entry):
        if any(e.name == entry.name for e in self.entries):
            raise DomainError("condition {!r} reported twice".format(entry.name))
        if self.absolute and entry.status is Status.FAIL:
            entry = ConditionEntry(
                entry.name,
                Status.INDETERMINATE,
                entry.witness,
                entry.parameters,
                "failed on |G|; absolute mode is sufficiency-only",
            )
        self.entries.append(entry)

    def extend(self, entries):
        for entry in entries:
            self.add(entry)

    def get(self, name):
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    @property
    def failed(self):
        return [e.name for e in self.entries if e.status is Status.FAIL]

    def to_dict(self):
        return {
            "mode": "absolute" if self.absolute else "raw",
            "horizon_limited": self.horizon_limited,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_table(self):
        width = max([len(e.name) for e in self.entries] + [9])
        lines = ["{:<{w}}  {:<13}  {}".format("condition", "status", "note", w=width)]
        for e in self.entries:
            lines.append("{:<{w}}  {:<13}  {}".format(e.name, e.status.value, e.reason or "", w=width))
        return "\n".join(lines)


@dataclass(frozen=True)
class BoundedRows:
    max_row_integral: float
    status: Status
    trend: Optional[str] = None


@dataclass(frozen=True)
class HeadDecay:
    limit_estimate: float
    status: Status
    trend: str
    rate: float


@dataclass(frozen=True)
class AvEstimate:
    T_list: Tuple[float, ...]
    estimates: Dict[int, Tuple[float, ...]]
    status: Status
    passing_v: Optional[int] = None


@dataclass(frozen=True)
class UniformProbe:
    T_list: Tuple[float, ...]
    deviations: Tuple[float, ...]
    bound: Optional[float]
    status: Status


def nonneg_check(kernel, mode="raw", tol=1e-12):
    """
    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> from volterra_stealth.stm import KernelTable
        >>> G = KernelTable(TimeGrid(1.0, 0.5), -np.ones((3, 3)))
        >>> nonneg_check(G).value, nonneg_check(G, "absolute").value
        ('fail', 'pass')
    """
    if mode not in ("raw", "absolute"):
        raise DomainError("mode must be 'raw' or 'absolute', got {!r}".format(mode))
    if mode == "absolute" or kernel.is_delta:
        return Status.PASS
    return Status.PASS if kernel.lower_min() >= -tol else Status.FAIL


def _stabilization(times, values, tolerances):
    """Whether the running maximum of ``|values|`` settles before the last quarter."""
    magnitude = np.abs(values)
    running = np.maximum.accumulate(magnitude)
    overall = float(running[-1])
    split = int(np.searchsorted(times, 0.75 * times[-1]))
    before = float(running[split - 1]) if split > 0 else 0.0
    if overall == 0.0 or before >= STABLE_FRACTION * overall:
        return Status.PASS, overall, None
    trend = tail_trend(times, magnitude, times[split], tolerances, overall)
    if trend.non_increasing:
        return Status.PASS, overall, trend.trend
    if trend.trend == "growing":
        return Status.FAIL, overall, trend.trend
    return Status.INDETERMINATE, overall, trend.trend


def check_bounded_rows(kernel, tolerances=None):
    """
    ``sup_t integral_0^t G(t, tau) dtau < infinity`` as a stabilizing running
    maximum.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> from volterra_stealth.stm import KernelTable
        >>> grid = TimeGrid(10.0, 0.1)
        >>> check_bounded_rows(KernelTable(grid, np.ones((grid.n, grid.n)))).status.value
        'fail'
    """
    status, overall, trend = _stabilization(kernel.grid.nodes, row_integrals(kernel), tolerances)
    return BoundedRows(overall, status, trend)


def moment_sup(kernel, p, tolerances=None):
    """``sup_t integral_0^t G(t, tau) tau^p dtau`` with the same stabilization test."""
    status, overall, trend = _stabilization(kernel.grid.nodes, moment_rows(kernel, p), tolerances)
    return BoundedRows(overall, status, trend)


def _tail_decay(times, values, start, tolerances):
    trend = tail_trend(times, values, start, tolerances, float(np.max(np.abs(values))))
    status = Status.PASS if trend.is_decaying else Status.FAIL
    return HeadDecay(trend.tail_max, status, trend.trend, trend.rate)


def moment_decay(kernel, p, tolerances=None, tail_fraction=0.2):
    """``integral_0^t G(t, tau) tau^p dtau -> 0`` as a decaying tail."""
    grid = kernel.grid
    start = (1.0 - tail_fraction) * grid.horizon
    return _tail_decay(grid.nodes, moment_rows(kernel, p), start, tolerances)


def check_vanishing_head(kernel, T, tolerances=None, tail_fraction=0.2):
    """
    ``integral_0^T G(t, tau) dtau -> 0`` as ``t`` grows.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> from volterra_stealth.stm import KernelTable
        >>> grid = TimeGrid(20.0, 0.05)
        >>> t = grid.nodes
        >>> G = KernelTable(grid, np.exp(-(t[:, None] - t[None, :])))
        >>> check_vanishing_head(G, 1.0).status.value
        'pass'
    """
    grid = kernel.grid
    if not 0 < T < grid.horizon:
        raise DomainError("T={} out of range (0, {})".format(T, grid.horizon))
    head = moment_rows(kernel, 0, 0.0, T)
    start = max((1.0 - tail_fraction) * grid.horizon, T + grid.dt)
    return _tail_decay(grid.nodes, head, start, tolerances)


def _check_T_list(grid, T_list, increasing):
    T_list = tuple(float(T) for T in T_list)
    if not T_list:
        raise DomainError("T_list must not be empty")
    steps = np.diff(T_list)
    if (increasing and np.any(steps <= 0)) or (not increasing and np.any(steps >= 0)):
        raise DomainError(
            "T_list must be strictly {}: {}".format("increasing" if increasing else "decreasing", T_list)
        )
    for T in T_list:
        if not 0 < T < grid.horizon:
            raise DomainError("T={} out of range (0, {})".format(T, grid.horizon))
    return tuple(float(grid.nodes[grid.index_of(T)]) for T in T_list)


def _check_resolution(grid, T_list):
    for T in T_list:
        if T < 4 * grid.dt - 1e-12:
            raise DomainError(
                "T={} is below the grid resolution 4*dt={}".format(T, 4 * grid.dt)
            )


def estimate_Av(kernel, v_max=3, T_list=None, stop_at_first_pass=True):
    """
    ``A_v(T) = sup_{t >= T} integral_T^t G_v(t, tau) dtau`` over ``T_list``
    for ``v = 1..v_max``.

    Passes when some ``v`` gives estimates below one that never increase
    with ``T``. Fails when at least two iterates were computed, every
    estimate is above one and each iterate dominates the previous one at
    every ``T``.
    """
    grid = kernel.grid
    if v_max < 1:
        raise DomainError("v_max must be >= 1")
    if v_max > 3 and grid.n > MAX_ITERATION_NODES:
        raise DomainError(
            "estimate_Av with v_max={} needs n <= {} (got {}); coarsen dt or "
            "lower v_max".format(v_max, MAX_ITERATION_NODES, grid.n)
        )
    if T_list is None:
        T_list = [f * grid.horizon for f in (0.2, 0.4, 0.6)]
    T_list = _check_T_list(grid, T_list, increasing=True)

    estimates = {}
    passing_v = None
    growing = True
    previous = None
    iterate = kernel
    for v in range(1, v_max + 1):
        if v > 1:
            iterate = compose_kernels(kernel, iterate)
        values = tuple(
            float(np.max(np.abs(moment_rows(iterate, 0, b1=T)))) for T in T_list
        )
        estimates[v] = values
        steps = np.diff(values)
        logger.debug("A_%s estimates over T=%s: %s", v, T_list, values)
        if all(e < 1.0 for e in values) and np.all(steps <= 0):
            passing_v = v
            if stop_at_first_pass:
                break
        growing = growing and all(e > 1.0 for e in values)
        if previous is not None:
            growing = growing and all(e >= p for e, p in zip(values, previous))
        previous = values
    if passing_v is not None:
        status = Status.PASS
    elif growing and len(estimates) > 1:
        status = Status.FAIL
    else:
        status = Status.INDETERMINATE
    return AvEstimate(T_list, estimates, status, passing_v)


def _shrinking(witnesses, T_list, tolerances):
    """Status of a witness sequence that should vanish as ``T`` decreases."""
    witnesses = np.abs(np.asarray(witnesses))
    if not witnesses.any():
        return Status.PASS, None
    if np.any(np.diff(witnesses) > 0):
        return Status.FAIL, None
    if not witnesses.all():
        return Status.PASS, None
    exponent = float(polynomial.polyfit(np.log(T_list), np.log(witnesses), 1)[1])
    if exponent >= tolerances.decay_exponent:
        return Status.PASS, exponent
    if exponent < 1e-3:
        return Status.FAIL, exponent
    return Status.INDETERMINATE, exponent


def _head_sup(g_c, T):
    return float(np.max(np.abs(moment_rows(g_c, 0, 0.0, T))))


def uniform_convergence_probe(g_c, q, T_list=(0.4, 0.2, 0.1), tolerances=None):
    """
    ``sup_t |F_T(t) - F_0(t)|`` for decreasing ``T`` where
    ``F_T(t) = integral_T^t g_c(t, tau) (tau - T)^(q-1) dtau``.

    For ``q >= 2`` the deviations must also respect ``q * T * M`` with
    ``M = sup_t integral_0^t g_c tau^(q-2) dtau``.
    """
    tolerances = tolerances or Tolerances()
    if q < 1:
        raise DomainError("q must be >= 1")
    grid = g_c.grid
    T_list = _check_T_list(grid, T_list, increasing=False)
    _check_resolution(grid, T_list)
    F_0 = moment_rows(g_c, q - 1)
    deviations = []
    for T in T_list:
        F_T = moment_rows(g_c, q - 1, b1=T, shift=T)
        deviations.append(float(np.max(np.abs(F_T - F_0))))
    status, _ = _shrinking(deviations, T_list, tolerances)
    bound = None
    if q >= 2:
        bound = float(np.max(np.abs(moment_rows(g_c, q - 2))))
        if any(d > q * T * bound * (1 + 1e-9) + 1e-15 for d, T in zip(deviations, T_list)):
            status = Status.FAIL
    return UniformProbe(T_list, tuple(deviations), bound, status)


def binomial_residual(mu, T, q):
    """
    Relative residual of ``(mu+T)^q - mu^q = q T mu^(q-1) + sum_k C(q,k) mu^(q-k) T^k``.

    Usage::

        >>> binomial_residual(1.5, 0.25, 4) < 1e-12
        True
    """
    lhs = (mu + T) ** q - mu ** q
    rhs = q * T * mu ** (q - 1) + sum(
        comb(q, k, exact=True) * mu ** (q - k) * T ** k for k in range(2, q + 1)
    )
    return abs(lhs - rhs) / max(abs(lhs), np.finfo(float).tiny)


def _entry_from(name, status, witness, parameters, reason=None):
    if status is Status.INDETERMINATE and not reason:
        reason = "trend inconclusive over the horizon"
    return ConditionEntry(name, status, witness, parameters, reason)


def _view(kernel, absolute):
    return kernel.abs() if absolute else kernel


def check_assumption1(config, kernels, absolute=False, v_max=3, T_list=None):
    """
    Entries ``assumption1.a.*`` (bounded rows and ``A_v < 1`` for the
    ``u_q`` kernel), ``assumption1.b`` (``integral_0^1 g_c`` bounded) and
    ``assumption1.c`` (``G_cp >= g_c >= 0``).
    """
    tolerances = config.tolerances
    g_c = _view(kernels.g_c, absolute)
    G_cp = _view(kernels.G_cp, absolute)
    G = _view(kernels.lvie_kernel, absolute)
    mode = "absolute" if absolute else "raw"
    entries = []

    if nonneg_check(G, mode, tolerances.nonneg_tol) is Status.PASS:
        rows = check_bounded_rows(G, tolerances)
        entries.append(
            _entry_from(
                "assumption1.a.bounded_rows",
                rows.status,
                {"max_row_integral": rows.max_row_integral, "trend": rows.trend},
                {"kernel": "G_cpq"},
            )
        )
        av = estimate_Av(G, v_max=v_max, T_list=T_list)
        entries.append(
            _entry_from(
                "assumption1.a.iterated_kernel",
                av.status,
                {"estimates": {str(v): list(e) for v, e in av.estimates.items()}, "passing_v": av.passing_v},
                {"v_max": v_max, "T_list": list(av.T_list)},
            )
        )
    else:
        reason = "the stability criterion needs a non-negative kernel; rerun with --abs"
        for name in ("assumption1.a.bounded_rows", "assumption1.a.iterated_kernel"):
            entries.append(ConditionEntry(name, Status.INDETERMINATE, {}, {"kernel": "G_cpq"}, reason))

    b2 = min(1.0, config.grid.horizon)
    head = moment_rows(g_c, 0, 0.0, b2)
    status, overall, trend = _stabilization(config.grid.nodes, head, tolerances)
    entries.append(
        _entry_from("assumption1.b", status, {"sup": overall, "trend": trend}, {"upper": b2})
    )

    if G_cp.is_delta:
        G_cp = g_c
    difference = float((G_cp.values - g_c.values)[np.tril_indices(config.grid.n)].min())
    smallest = g_c.lower_min()
    tol = tolerances.nonneg_tol
    ordered = difference >= -tol and smallest >= -tol
    entries.append(
        ConditionEntry(
            "assumption1.c",
            Status.PASS if ordered else Status.FAIL,
            {"min_G_cp_minus_g_c": difference, "min_g_c": smallest},
            {"nonneg_tol": tol, "unity_plant": config.plant.is_unity},
        )
    )
    return entries


def check_assumption2(
    config,
    kernels,
    absolute=False,
    T_head=None,
    T_small=(0.5, 0.25, 0.125),
    stable=True,
):
    """
    Entries ``assumption2.a`` (vanishing head of the ``u_q`` kernel),
    ``assumption2.b`` (``integral_0^1 g_c -> 0``, reading the unsubscripted
    kernel as ``g_c``) and ``assumption2.c`` (``sup_t integral_0^T g_c -> 0``).
    """
    tolerances = config.tolerances
    grid = config.grid
    g_c = _view(kernels.g_c, absolute)
    G = _view(kernels.lvie_kernel, absolute)
    if T_head is None:
        T_head = min(1.0, 0.25 * grid.horizon)
    entries = []

    head = check_vanishing_head(G, T_head, tolerances, config.tail_fraction)
    status, reason = head.status, None
    if status is Status.PASS and not stable:
        status, reason = Status.INDETERMINATE, "assumption1.a did not pass"
    entries.append(
        _entry_from(
            "assumption2.a",
            status,
            {"limit_estimate": head.limit_estimate, "trend": head.trend, "rate": head.rate},
            {"T": T_head, "kernel": "G_cpq"},
            reason,
        )
    )

    b2 = min(1.0, grid.horizon)
    decay = _tail_decay(
        grid.nodes,
        moment_rows(g_c, 0, 0.0, b2),
        max((1.0 - config.tail_fraction) * grid.horizon, b2 + grid.dt),
        tolerances,
    )
    entries.append(
        ConditionEntry(
            "assumption2.b",
            decay.status,
            {"limit_estimate": decay.limit_estimate, "trend": decay.trend},
            {"upper": b2, "kernel": "g_c"},
        )
    )

    T_small = _check_T_list(grid, T_small, increasing=False)
    _check_resolution(grid, T_small)
    sups = [_head_sup(g_c, T) for T in T_small]
    status, exponent = _shrinking(sups, T_small, tolerances)
    entries.append(
        _entry_from(
            "assumption2.c",
            status,
            {"sups": sups, "exponent": exponent},
            {"T_list": list(T_small)},
        )
    )
    return entries


def check_moments(config, kernels, absolute=False):
    """Bounded and vanishing ``g_c`` moments, and the ``tau^a <= 1 + tau^q`` dominance."""
    tolerances = config.tolerances
    g_c = _view(kernels.g_c, absolute)
    q, a = config.q, config.attack.a
    entries = []

    bounded = moment_sup(g_c, q, tolerances)
    entries.append(
        _entry_from(
            "moments.sup",
            bounded.status,
            {"sup": bounded.max_row_integral, "trend": bounded.trend},
            {"p": q},
        )
    )
    decay = moment_decay(g_c, q - 1, tolerances, config.tail_fraction)
    entries.append(
        ConditionEntry(
            "moments.decay",
            decay.status,
            {"limit_estimate": decay.limit_estimate, "trend": decay.trend, "rate": decay.rate},
            {"p": q - 1},
        )
    )
    if a <= q:
        lhs = float(np.max(moment_rows(g_c, a)))
        rhs = float(np.max(moment_rows(g_c, 0))) + float(np.max(moment_rows(g_c, q)))
        dominated = lhs <= rhs * (1 + 1e-12) + 1e-15
        entries.append(
            ConditionEntry(
                "moments.dominance",
                Status.PASS if dominated else Status.FAIL,
                {"sup_attack_moment": lhs, "bound": rhs},
                {"a": a, "q": q},
            )
        )
    else:
        entries.append(
            ConditionEntry(
                "moments.dominance",
                Status.INDETERMINATE,
                {},
                {"a": a, "q": q},
                "dominance only applies for a <= q",
            )
        )
    return entries


def run_checks(
    config,
    kernels=None,
    absolute=False,
    v_max=3,
    T_list=None,
    T_head=None,
    T_small=(0.5, 0.25, 0.125),
    probe_T=(0.4, 0.2, 0.1),
):
    """Run every check and collect a :class:`ConditionReport`."""
    kernels = kernels or build_kernels(config)
    tolerances = config.tolerances
    mode = "absolute" if absolute else "raw"
    report = ConditionReport(absolute=absolute)

    g_ok = nonneg_check(kernels.g_c, mode, tolerances.nonneg_tol)
    G_ok = nonneg_check(kernels.lvie_kernel, mode, tolerances.nonneg_tol)
    report.add(ConditionEntry("nonneg.g_c", g_ok, {"min": kernels.g_c.lower_min()}, {"mode": mode}))
    report.add(
        ConditionEntry(
            "nonneg.lvie_kernel",
            G_ok,
            {"min": kernels.lvie_kernel.lower_min()},
            {"mode": mode, "feedback_sign": config.feedback_sign},
        )
    )

    report.extend(check_assumption1(config, kernels, absolute, v_max, T_list))
    stable = all(
        report.get(name).status is Status.PASS
        for name in ("assumption1.a.bounded_rows", "assumption1.a.iterated_kernel")
    )
    report.extend(check_assumption2(config, kernels, absolute, T_head, T_small, stable))

    moments = check_moments(config, kernels, absolute)
    probe = uniform_convergence_probe(_view(kernels.g_c, absolute), config.q, probe_T, tolerances)
    moments.append(
        _entry_from(
            "probe.uniform_convergence",
            probe.status,
            {"deviations": list(probe.deviations), "bound": probe.bound},
            {"q": config.q, "T_list": list(probe.T_list)},
        )
    )
    if g_ok is not Status.PASS:
        reason = "requires g_c >= 0; rerun with --abs"
        moments = [
            ConditionEntry(e.name, Status.INDETERMINATE, e.witness, e.parameters, reason)
            for e in moments
        ]
    report.extend(moments)

    logger.info(
        "condition report (%s): %s entries, %s failed",
        mode,
        len(report.entries),
        len(report.failed),
    )
    return report


__all__ = [
    "AvEstimate",
    "BoundedRows",
    "ConditionEntry",
    "ConditionReport",
    "HeadDecay",
    "Status",
    "UniformProbe",
    "binomial_residual",
    "check_assumption1",
    "check_assumption2",
    "check_bounded_rows",
    "check_moments",
    "check_vanishing_head",
    "estimate_Av",
    "moment_decay",
    "moment_integral",
    "moment_rows",
    "moment_sup",
    "nonneg_check",
    "run_checks",
    "uniform_convergence_probe",
]
