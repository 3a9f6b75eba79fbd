# -*- coding: utf-8 -*-
"""
State-transition matrices and sampled impulse-response kernels.

Kernels are dense lower-triangular tables ``K[i, j] = k(t_i, t_j)`` for
``j <= i``. Entries above the diagonal are always zero.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DomainError,
    LtvStateSpace,
    NumericalError,
    TimeGrid,
    _readonly,
)

logger = logging.getLogger(__name__)

ODE_STEP = 1e-3
WARN_KERNEL_NODES = 5000
MAX_KERNEL_NODES = 20001


def check_kernel_workload(grid):
    """Warn about, or refuse, grids whose n x n tables get too large."""
    if grid.n > MAX_KERNEL_NODES:
        raise DomainError(
            "{} nodes exceed the kernel table limit of {}; increase dt or "
            "shorten t_end".format(grid.n, MAX_KERNEL_NODES)
        )
    if grid.n > WARN_KERNEL_NODES:
        logger.warning(
            "building %sx%s kernel tables (%.0f MB each)",
            grid.n,
            grid.n,
            grid.n ** 2 * 8 / 1e6,
        )


@dataclass(frozen=True)
class KernelTable:
    """
    A sampled Volterra kernel.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> table = KernelTable(TimeGrid(1.0, 0.5), -np.ones((3, 3)))
        >>> table.values.tolist()
        [[-1.0, 0.0, 0.0], [-1.0, -1.0, 0.0], [-1.0, -1.0, -1.0]]
        >>> float(table.abs().at(1.0, 0.5))
        1.0
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    is_delta = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n, self.grid.n):
            raise DomainError(
                "kernel table has shape {} but the grid has {} nodes".format(
                    values.shape, self.grid.n
                )
            )
        values = np.tril(values)
        if not np.all(np.isfinite(values)):
            raise NumericalError("kernel table contains non-finite entries")
        object.__setattr__(self, "values", _readonly(values))

    def abs(self):
        return KernelTable(self.grid, np.abs(self.values))

    def scale(self, c):
        return KernelTable(self.grid, c * self.values)

    def diagonal(self):
        return np.diagonal(self.values)

    def at(self, t, tau):
        if tau > t:
            raise DomainError("kernel is only defined for tau <= t")
        return self.values[self.grid.index_of(t), self.grid.index_of(tau)]

    def lower_min(self):
        """Smallest entry on or below the diagonal."""
        return float(self.values[np.tril_indices(self.grid.n)].min())


@dataclass(frozen=True)
class DeltaKernel:
    """The identity kernel ``delta(t - tau)`` of a unity-gain plant."""

    grid: TimeGrid

    is_delta = True

    def abs(self):
        return self

    def scale(self, c):
        if c != 1:
            raise DomainError("a scaled delta kernel has no table form")
        return self


@dataclass(frozen=True)
class IntegratorKernel(KernelTable):
    """``(t - tau)^(q-1) / (q-1)!``; compositions use its convolution form."""

    q: int = 1


def transition_matrix(system, t, tau, step=ODE_STEP):
    """
    ``Phi(t, tau)`` by fixed-step classical Runge-Kutta on
    ``dPhi/dt = A(t) Phi``, ``Phi(tau, tau) = I``.

    Usage::

        >>> import math
        >>> from volterra_stealth.core import LtvStateSpace
        >>> ss = LtvStateSpace.from_arrays([[{"poly": [0, 0, -1]}]], [[1]], [[1]])
        >>> phi = transition_matrix(ss, 2.0, 1.0)
        >>> abs(float(phi[0, 0]) - math.exp(-7.0 / 3.0)) < 1e-10
        True
    """
    if tau < 0 or tau > t:
        raise DomainError("transition_matrix needs 0 <= tau <= t, got tau={} t={}".format(tau, t))
    size = system.n_states
    if t == tau:
        return np.eye(size)
    steps = max(1, int(math.ceil((t - tau) / step - 1e-9)))
    h = (t - tau) / steps
    A = system.A(tau + 0.5 * h * np.arange(2 * steps + 1))
    phi = np.eye(size)
    for k in range(steps):
        a0, ah, a1 = A[2 * k], A[2 * k + 1], A[2 * k + 2]
        k1 = a0 @ phi
        k2 = ah @ (phi + 0.5 * h * k1)
        k3 = ah @ (phi + 0.5 * h * k2)
        k4 = a1 @ (phi + h * k3)
        phi = phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(phi)):
        raise NumericalError("transition matrix overflowed on [{}, {}]".format(tau, t))
    return phi


def interval_transitions(system, grid, step=ODE_STEP):
    """
    ``S[i] = Phi(t_{i+1}, t_i)`` for every grid interval, integrated with
    ``ceil(dt/step)`` Runge-Kutta substeps, all intervals at once.
    """
    substeps = max(1, int(math.ceil(grid.dt / step - 1e-9)))
    h = grid.dt / substeps
    left = grid.nodes[:-1]
    S = np.broadcast_to(np.eye(system.n_states), (grid.n - 1,) + (system.n_states,) * 2).copy()
    for k in range(substeps):
        t0 = left + k * h
        a0, ah, a1 = system.A(t0), system.A(t0 + 0.5 * h), system.A(t0 + h)
        k1 = a0 @ S
        k2 = ah @ (S + 0.5 * h * k1)
        k3 = ah @ (S + 0.5 * h * k2)
        k4 = a1 @ (S + h * k3)
        S = S + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(S)):
        raise NumericalError("transition matrices overflowed on [0, {}]".format(grid.horizon))
    return S


def impulse_kernel(system, grid):
    """
    ``g(t_i, t_j) = C(t_i) Phi(t_i, t_j) B(t_j)`` on the lower triangle.

    The columns ``Phi(t_i, t_j) B(t_j)`` are advanced node by node with the
    interval transition matrices.

    Usage::

        >>> import math
        >>> from volterra_stealth.core import LtvStateSpace, TimeGrid
        >>> ss = LtvStateSpace.from_arrays([[-1]], [[1]], [[1]])
        >>> g = impulse_kernel(ss, TimeGrid(2.0, 0.01))
        >>> abs(float(g.at(2.0, 1.0)) - math.exp(-1.0)) < 1e-10
        True
    """
    check_kernel_workload(grid)
    system.check_finite(grid)
    n = grid.n
    S = interval_transitions(system, grid)
    B = system.B(grid.nodes)[:, :, 0]
    C = system.C(grid.nodes)[:, 0, :]
    columns = np.zeros((n, system.n_states))
    values = np.zeros((n, n))
    columns[0] = B[0]
    values[0, 0] = C[0] @ B[0]
    for i in range(1, n):
        columns[:i] = columns[:i] @ S[i - 1].T
        columns[i] = B[i]
        values[i, : i + 1] = columns[: i + 1] @ C[i]
    logger.debug("impulse kernel on %s nodes, %s states", n, system.n_states)
    return KernelTable(grid, values)


def integrator_kernel(q, grid):
    """
    Kernel of a chain of ``q`` integrators.

    Usage::

        >>> from volterra_stealth.core import TimeGrid
        >>> g = integrator_kernel(2, TimeGrid(1.0, 0.25))
        >>> float(g.at(1.0, 0.25))
        0.75
        >>> g.q
        2
    """
    if isinstance(q, bool) or int(q) != q or q < 1:
        raise DomainError("q must be an integer >= 1, got {!r}".format(q))
    check_kernel_workload(grid)
    t = grid.nodes
    lag = np.tril(t[:, None] - t[None, :])
    values = np.tril(lag ** (q - 1)) / math.factorial(q - 1)
    return IntegratorKernel(grid, values, q=int(q))


def integrator_state_space(q):
    """
    Realization of the ``q``-integrator chain whose output is the first state.

    Usage::

        >>> ss = integrator_state_space(3)
        >>> ss.A(0.0).tolist()
        [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]
        >>> ss.B(0.0).ravel().tolist(), ss.C(0.0).ravel().tolist()
        ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    """
    if q < 1:
        raise DomainError("q must be >= 1, got {}".format(q))
    A = [[1.0 if col == row + 1 else 0.0 for col in range(q)] for row in range(q)]
    B = [[1.0 if row == q - 1 else 0.0] for row in range(q)]
    C = [[1.0 if col == 0 else 0.0 for col in range(q)]]
    return LtvStateSpace.from_arrays(A, B, C)


def export_kernel_csv(table, path):
    """Write ``t,tau,value`` rows for the lower triangle of ``table``."""
    rows, cols = np.tril_indices(table.grid.n)
    t = table.grid.nodes
    np.savetxt(
        path,
        np.column_stack([t[rows], t[cols], table.values[rows, cols]]),
        delimiter=",",
        header="t,tau,value",
        comments="",
    )
    logger.info("wrote %s kernel entries to %s", len(rows), path)
