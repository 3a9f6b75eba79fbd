# -*- coding: utf-8 -*-
"""
The attacked loop: controller, integrator chain and plant simulated as one
stacked linear time-varying ODE, the kernels of its ``u_q`` equation and the
cross-check between the two.

The summing junction in front of the controller is
``u_c = s * y_p + y_a`` with ``s = config.feedback_sign``.
"""

import csv
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .attack import attack_signal, attack_values, forcing_term
from .core import NumericalError, Signal
from .lvie import compose_kernels, solve_lvie
from .stm import (
    DeltaKernel,
    ODE_STEP,
    check_kernel_workload,
    impulse_kernel,
    integrator_kernel,
    integrator_state_space,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelBundle:
    g_c: object
    g_p: object
    g_q: object
    G_cp: object
    G_cpq: object
    lvie_kernel: object


def build_kernels(config):
    """
    Sample ``g_c``, ``g_p``, ``g_q`` and compose ``G_cp = g_c o g_p`` and
    ``G_cpq = G_cp o g_q``. ``lvie_kernel`` is ``s * G_cpq``.
    """
    grid = config.grid
    check_kernel_workload(grid)
    g_c = impulse_kernel(config.controller, grid)
    if config.plant.is_unity:
        g_p = DeltaKernel(grid)
    else:
        g_p = impulse_kernel(config.plant.state_space, grid)
    g_q = integrator_kernel(config.q, grid)
    G_cp = compose_kernels(g_c, g_p)
    G_cpq = compose_kernels(G_cp, g_q)
    lvie_kernel = G_cpq if config.feedback_sign == 1 else G_cpq.scale(-1.0)
    logger.info("built loop kernels on %s nodes (q=%s)", grid.n, config.q)
    return KernelBundle(g_c, g_p, g_q, G_cp, G_cpq, lvie_kernel)


@dataclass(frozen=True)
class Trajectories:
    u_q: Signal
    u_c: Signal
    u_p: Signal
    y_p: Signal
    y_a: Signal
    growth_detected_at: Optional[float] = None

    @property
    def grid(self):
        return self.u_q.grid

    def signals(self):
        return {
            "u_q": self.u_q,
            "u_c": self.u_c,
            "u_p": self.u_p,
            "y_p": self.y_p,
            "y_a": self.y_a,
        }


def _stacked_system(config, times):
    """
    Matrices ``M(t)`` and injection columns ``b(t)`` of the stacked state
    ``[x_c; x_q; x_p]`` so that ``z' = M(t) z + b(t) y_a(t)``.
    """
    controller = config.controller
    chain = integrator_state_space(config.q)
    plant = config.plant.state_space
    nc, nq = controller.n_states, config.q
    n_p = 0 if plant is None else plant.n_states
    size = nc + nq + n_p
    k = len(times)
    s = float(config.feedback_sign)
    M = np.zeros((k, size, size))
    c, q, p = slice(0, nc), slice(nc, nc + nq), slice(nc + nq, size)

    Bc = controller.B(times)
    M[:, c, c] = controller.A(times)
    M[:, q, q] = chain.A(0.0)
    M[:, q, c] = chain.B(0.0)[None] @ controller.C(times)
    if plant is None:
        M[:, c, nc] = s * Bc[:, :, 0]
    else:
        M[:, p, p] = plant.A(times)
        M[:, p, nc] = plant.B(times)[:, :, 0]
        M[:, c, p] = s * Bc @ plant.C(times)
    injection = np.zeros((k, size))
    injection[:, c] = Bc[:, :, 0]
    return M, injection


def _outputs(config, Z, times, y_a):
    controller = config.controller
    plant = config.plant.state_space
    nc = controller.n_states
    c, p = slice(0, nc), slice(nc + config.q, Z.shape[1])
    u_q = np.einsum("kj,kj->k", controller.C(times)[:, 0, :], Z[:, c])
    u_p = Z[:, nc]
    if plant is None:
        y_p = u_p.copy()
    else:
        y_p = np.einsum("kj,kj->k", plant.C(times)[:, 0, :], Z[:, p])
    u_c = config.feedback_sign * y_p + y_a
    return u_q, u_c, u_p, y_p


def simulate(config):
    """
    Integrate the attacked loop from rest with fixed-step Runge-Kutta (step
    ``min(dt, 1e-3)``) and sample the loop signals on the grid.

    When any state exceeds ``tolerances.sup_guard`` the integration stops;
    the signals are truncated at the last sampled node and
    ``growth_detected_at`` records the time.
    """
    grid = config.grid
    for system in filter(None, (config.controller, config.plant.state_space)):
        system.check_finite(grid)
    substeps = max(1, int(math.ceil(grid.dt / ODE_STEP - 1e-9)))
    h = grid.dt / substeps
    steps = (grid.n - 1) * substeps
    stage_times = 0.5 * h * np.arange(2 * steps + 1)
    M, injection = _stacked_system(config, stage_times)
    ya_stage = attack_values(config.attack, stage_times)
    forcing = injection * ya_stage[:, None]
    guard = config.tolerances.sup_guard

    Z = np.zeros((grid.n, M.shape[1]))
    z = np.zeros(M.shape[1])
    growth_at = None
    sampled = grid.n
    for step in range(steps):
        k0, kh, k1 = 2 * step, 2 * step + 1, 2 * step + 2
        d1 = M[k0] @ z + forcing[k0]
        d2 = M[kh] @ (z + 0.5 * h * d1) + forcing[kh]
        d3 = M[kh] @ (z + 0.5 * h * d2) + forcing[kh]
        d4 = M[k1] @ (z + h * d3) + forcing[k1]
        z = z + h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        if (step + 1) % substeps:
            continue
        node = (step + 1) // substeps
        if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > guard:
            growth_at = float(grid.nodes[node])
            sampled = node
            logger.warning("loop state exceeded %g at t=%s", guard, growth_at)
            break
        Z[node] = z

    if sampled < 2:
        raise NumericalError("loop diverged within the first step")
    out_grid = grid if sampled == grid.n else grid.truncated(sampled)
    times = out_grid.nodes
    Z = Z[:sampled]
    y_a = attack_signal(config.attack, out_grid).values
    u_q, u_c, u_p, y_p = _outputs(config, Z, times, y_a)
    return Trajectories(
        u_q=Signal(out_grid, u_q),
        u_c=Signal(out_grid, u_c),
        u_p=Signal(out_grid, u_p),
        y_p=Signal(out_grid, y_p),
        y_a=Signal(out_grid, y_a),
        growth_detected_at=growth_at,
    )


def uq_via_lvie(config, kernels=None):
    """``u_q`` from the second-kind equation with kernel ``s * G_cpq``."""
    kernels = kernels or build_kernels(config)
    phi = forcing_term(kernels.g_c, config.attack)
    return solve_lvie(kernels.lvie_kernel, phi, config.tolerances.singular_tol)


@dataclass(frozen=True)
class CrossValidation:
    sup_diff: float
    tolerance: float
    passed: bool
    refined_sup_diff: Optional[float] = None

    @property
    def ratio(self):
        if not self.refined_sup_diff:
            return None
        return self.sup_diff / self.refined_sup_diff

    def to_dict(self):
        return {
            "sup_diff": self.sup_diff,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "refined_sup_diff": self.refined_sup_diff,
            "ratio": self.ratio,
        }


def _sup_diff(config, trajectories=None, kernels=None):
    trajectories = trajectories or simulate(config)
    lvie_uq = uq_via_lvie(config, kernels)
    n = len(trajectories.u_q)
    return float(np.max(np.abs(trajectories.u_q.values - lvie_uq.values[:n])))


def cross_validate(config, refine=False, trajectories=None, kernels=None):
    """
    Compare ``u_q`` from the ODE oracle with the LVIE solution.

    With ``refine`` the comparison is repeated at ``dt/2`` and must shrink.

    Usage::

        >>> from volterra_stealth.config import preset
        >>> cfg = preset("ex1").with_grid(t_end=2.0, dt=0.01)
        >>> cross_validate(cfg).passed
        True
    """
    tolerance = config.tolerances.xval_tol
    diff = _sup_diff(config, trajectories, kernels)
    refined = None
    passed = diff <= tolerance
    if refine:
        fine = config.with_grid(t_end=config.grid.horizon, dt=config.grid.dt / 2.0)
        refined = _sup_diff(fine)
        passed = passed and (refined < diff or diff == 0.0)
    logger.info("cross-validation sup diff %.3g (refined %s)", diff, refined)
    return CrossValidation(diff, tolerance, passed, refined)


def export_trajectories_csv(trajectories, path):
    """One row per grid node: ``t,u_q,u_c,u_p,y_p,y_a``."""
    columns = trajectories.signals()
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t"] + list(columns))
        for i, t in enumerate(trajectories.grid.nodes):
            writer.writerow(
                ["{:.10g}".format(t)] + [repr(float(s.values[i])) for s in columns.values()]
            )
    logger.info("wrote %s rows to %s", trajectories.grid.n, path)

