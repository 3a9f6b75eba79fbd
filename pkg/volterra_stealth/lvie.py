# -*- coding: utf-8 -*-
"""
Second-kind linear Volterra integral equations
``x(t) = phi(t) + integral_0^t G(t, tau) x(tau) dtau`` on a uniform grid,
solved with the product trapezoidal rule, plus the kernel algebra
(composition, iteration, row quadratures) built on the same rule.
"""

import logging
import math

import numpy as np
from scipy.special import comb

from .core import DomainError, NumericalError, Signal, ensure_same_grid
from .stm import (
    DeltaKernel,
    IntegratorKernel,
    KernelTable,
    check_kernel_workload,
)

logger = logging.getLogger(__name__)


def solve_lvie(kernel, forcing, singular_tol=1e-12):
    """
    Product-trapezoid solution of the second-kind equation.

    ``x_0 = phi_0`` and, for ``i >= 1``,
    ``x_i (1 - dt/2 G_ii) = phi_i + dt (G_i0 x_0 / 2 + sum_{0<j<i} G_ij x_j)``.

    Usage::

        >>> import math
        >>> import numpy as np
        >>> from volterra_stealth.core import Signal, TimeGrid
        >>> grid = TimeGrid(1.0, 1e-3)
        >>> G = KernelTable(grid, -np.ones((grid.n, grid.n)))
        >>> x = solve_lvie(G, Signal(grid, np.ones(grid.n)))
        >>> abs(float(x.values[-1]) - math.exp(-1.0)) < 1e-6
        True
    """
    if kernel.is_delta:
        raise DomainError("the delta kernel is not a Volterra kernel")
    grid = ensure_same_grid(kernel, forcing)
    dt = grid.dt
    K = kernel.values
    f = forcing.values
    x = np.empty(grid.n)
    x[0] = f[0]
    for i in range(1, grid.n):
        denominator = 1.0 - 0.5 * dt * K[i, i]
        if abs(denominator) < singular_tol:
            raise NumericalError(
                "implicit trapezoid step is singular at t={}".format(grid.nodes[i])
            )
        history = 0.5 * K[i, 0] * x[0] + K[i, 1:i] @ x[1:i]
        x[i] = (f[i] + dt * history) / denominator
        if not np.isfinite(x[i]):
            raise NumericalError("solution overflowed at t={}".format(grid.nodes[i]))
    return Signal(grid, x)


def _trapezoid_tails(W, dt):
    """
    ``T[i, j] = dt * (sum_{k=j..i} W[i,k] - W[i,j]/2 - W[i,i]/2)`` for a
    lower-triangular ``W``.
    """
    suffix = np.cumsum(W[:, ::-1], axis=1)[:, ::-1]
    T = dt * (suffix - 0.5 * W - 0.5 * np.diagonal(W)[:, None])
    T = np.tril(T)
    np.fill_diagonal(T, 0.0)
    return T


def _compose_with_integrator(first, q):
    """Composition with ``(t - tau)^(q-1)/(q-1)!`` by binomial expansion."""
    grid = first.grid
    t = grid.nodes
    result = np.zeros_like(first.values)
    for m in range(q):
        tails = _trapezoid_tails(first.values * t[None, :] ** m, grid.dt)
        weight = comb(q - 1, m, exact=True) * (-t) ** (q - 1 - m)
        result += tails * weight[None, :]
    return KernelTable(grid, result / math.factorial(q - 1))


def compose_kernels(first, second):
    """
    Trapezoidal composition
    ``(first o second)(t, tau) = integral_tau^t first(t, s) second(s, tau) ds``.

    Delta kernels act as the identity. Compositions with an
    :class:`~volterra_stealth.stm.IntegratorKernel` use its convolution
    structure; everything else is a masked matrix product.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> from volterra_stealth.stm import integrator_kernel
        >>> grid = TimeGrid(1.0, 0.25)
        >>> one = integrator_kernel(1, grid)
        >>> float(compose_kernels(one, one).at(1.0, 0.25))
        0.75
    """
    ensure_same_grid(first, second)
    if second.is_delta:
        return first
    if first.is_delta:
        return second
    if isinstance(second, IntegratorKernel):
        return _compose_with_integrator(first, second.q)
    grid = first.grid
    check_kernel_workload(grid)
    K1, K2 = first.values, second.values
    product = K1 @ K2
    product -= 0.5 * K1 * np.diagonal(K2)[None, :]
    product -= 0.5 * np.diagonal(K1)[:, None] * K2
    product *= grid.dt
    np.fill_diagonal(product, 0.0)
    return KernelTable(grid, product)


def iterate_kernel(kernel, v):
    """
    ``G_1 = G`` and ``G_v = G o G_{v-1}``.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> grid = TimeGrid(1.0, 0.25)
        >>> G2 = iterate_kernel(KernelTable(grid, 0.5 * np.ones((5, 5))), 2)
        >>> float(G2.at(1.0, 0.0))
        0.25
    """
    if isinstance(v, bool) or int(v) != v or v < 1:
        raise DomainError("iteration count must be an integer >= 1, got {!r}".format(v))
    result = kernel
    for _ in range(int(v) - 1):
        result = compose_kernels(kernel, result)
    return result


def row_integrals(kernel):
    """Trapezoid values of ``integral_0^{t_i} G(t_i, tau) dtau`` for every row."""
    K = kernel.values
    return kernel.grid.dt * (K.sum(axis=1) - 0.5 * K[:, 0] - 0.5 * np.diagonal(K))


def row_integral(kernel, t):
    """
    ``integral_0^t G(t, tau) dtau`` at a grid time.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> grid = TimeGrid(2.0, 0.5)
        >>> row_integral(KernelTable(grid, np.ones((5, 5))), 1.5)
        1.5
    """
    if t < 0:
        raise DomainError("row time must be non-negative")
    return float(row_integrals(kernel)[kernel.grid.index_of(t)])


def moment_rows(kernel, p, b1=0.0, b2=None, shift=0.0):
    """
    Trapezoid values of ``integral_{b1}^{min(b2, t_i)} G(t_i, tau) (tau - shift)^p dtau``
    for every row ``i``; rows with ``t_i <= b1`` are zero.

    Bounds snap to the nearest grid node.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> grid = TimeGrid(2.0, 0.5)
        >>> moment_rows(KernelTable(grid, np.ones((5, 5))), 1).tolist()
        [0.0, 0.125, 0.5, 1.125, 2.0]
    """
    if isinstance(p, bool) or int(p) != p or p < 0:
        raise DomainError("moment order must be a non-negative integer, got {!r}".format(p))
    grid = kernel.grid
    if b2 is None:
        b2 = grid.horizon
    if not 0 <= b1 <= b2:
        raise DomainError("moment bounds out of order: b1={} b2={}".format(b1, b2))
    j1, j2 = grid.index_of(b1), grid.index_of(b2)
    tau = grid.nodes[j1 : j2 + 1]
    W = kernel.values[:, j1 : j2 + 1] * (tau - shift)[None, :] ** int(p)
    rows = np.arange(grid.n)
    upper = np.minimum(rows, j2) - j1
    cumulative = np.cumsum(W, axis=1)
    clipped = np.maximum(upper, 0)
    values = grid.dt * (
        cumulative[rows, clipped] - 0.5 * W[:, 0] - 0.5 * W[rows, clipped]
    )
    values[upper <= 0] = 0.0
    return values


def moment_integral(kernel, p, b1, b2, t):
    """
    ``Gamma_p(b1, b2; t) = integral_{b1}^{b2} G(t, tau) tau^p dtau`` with
    ``0 <= b1 <= b2 <= t``.

    Usage::

        >>> import numpy as np
        >>> from volterra_stealth.core import TimeGrid
        >>> grid = TimeGrid(2.0, 0.5)
        >>> moment_integral(KernelTable(grid, np.ones((5, 5))), 0, 0.5, 1.5, 2.0)
        1.0
    """
    if not 0 <= b1 <= b2 <= t:
        raise DomainError(
            "moment bounds out of order: need 0 <= b1 <= b2 <= t, got {} {} {}".format(b1, b2, t)
        )
    grid = kernel.grid
    i, j1, j2 = grid.index_of(t), grid.index_of(b1), grid.index_of(b2)
    if j2 == j1:
        return 0.0
    row = kernel.values[i, j1 : j2 + 1] * grid.nodes[j1 : j2 + 1] ** int(p)
    return float(grid.dt * (row.sum() - 0.5 * row[0] - 0.5 * row[-1]))


def check_lvie_residual(kernel, forcing, solution):
    """Largest discrete residual of the trapezoid scheme; near zero for solver output."""
    K = kernel.values
    x = solution.values
    dt = kernel.grid.dt
    history = dt * (K @ x - 0.5 * K[:, 0] * x[0] - 0.5 * np.diagonal(K) * x)
    history[0] = 0.0
    return float(np.max(np.abs(x - forcing.values - history)))


__all__ = [
    "DeltaKernel",
    "KernelTable",
    "check_lvie_residual",
    "compose_kernels",
    "iterate_kernel",
    "moment_integral",
    "moment_rows",
    "row_integral",
    "row_integrals",
    "solve_lvie",
]
