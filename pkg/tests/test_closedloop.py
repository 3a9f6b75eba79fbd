import csv

import numpy as np
import pytest
from scipy.integrate import cumulative_trapezoid

from volterra_stealth import closedloop
from volterra_stealth.attack import stealth_verdict
from volterra_stealth.config import config_from_dict, preset, preset_dict
from volterra_stealth.core import AttackSpec, Tolerances, decay_metric
from volterra_stealth.lvie import row_integrals
from volterra_stealth.stm import DeltaKernel, IntegratorKernel


def _ex1(a=2, h=1.0, **changes):
    return preset('ex1').with_changes(attack=AttackSpec(a, h), **changes)


@pytest.mark.parametrize('a', [0, 1])
def test_ex1_low_degree_attacks_are_untraceable(a):
    traj = closedloop.simulate(_ex1(a=a))
    verdict = stealth_verdict(traj.u_q, epsilon=1.0)
    assert verdict.trend == 'decaying'
    assert verdict.is_untraceable
    assert traj.growth_detected_at is None


def test_ex1_quadratic_attack_plateaus():
    traj = closedloop.simulate(_ex1())
    verdict = stealth_verdict(traj.u_q, epsilon=1.0)
    assert 0.45 < verdict.sup < 1.0
    assert verdict.is_epsilon_stealthy
    assert not verdict.is_untraceable
    assert verdict.trend == 'plateau'


def test_ex1_cubic_attack_grows():
    traj = closedloop.simulate(_ex1(a=3))
    assert stealth_verdict(traj.u_q, epsilon=1.0).trend == 'growing'


def test_ex1_negative_feedback_settles_at_one_third():
    traj = closedloop.simulate(_ex1(feedback_sign=-1))
    assert np.max(np.abs(traj.u_q.values)) < 0.5
    assert abs(traj.u_q.values[-1] - 1.0 / 3.0) < 0.05


def test_ex2_controller_input_stealthy_but_plant_output_grows():
    traj = closedloop.simulate(preset('ex2').with_grid(t_end=20.0))
    u_q = traj.u_q.truncated(10001)
    verdict = stealth_verdict(u_q, epsilon=3.0)
    assert verdict.sup < 3.0
    assert verdict.trend == 'decaying'
    y_p = traj.y_p.values
    assert abs(y_p[-1]) > abs(y_p[10000])
    assert not decay_metric(traj.y_p).is_decaying


def test_simulation_is_linear_in_the_weight():
    config = _ex1().with_grid(t_end=4.0)
    one = closedloop.simulate(config)
    two = closedloop.simulate(config.with_changes(attack=AttackSpec(2, 2.0)))
    np.testing.assert_allclose(two.u_q.values, 2.0 * one.u_q.values, rtol=1e-12, atol=0)
    np.testing.assert_allclose(two.y_p.values, 2.0 * one.y_p.values, rtol=1e-12, atol=0)


HOMOGENEITY_CASES = list(zip(
    np.random.RandomState(7).randint(0, 3, size=20).tolist(),
    np.random.RandomState(11).uniform(-3.0, 3.0, size=20).tolist(),
))


@pytest.mark.parametrize('a, h', HOMOGENEITY_CASES)
def test_doubling_the_weight_doubles_u_q(a, h):
    config = _ex1(a=a, h=h).with_grid(t_end=4.0, dt=0.01)
    one = closedloop.simulate(config).u_q.values
    two = closedloop.simulate(config.with_changes(attack=AttackSpec(a, 2.0 * h))).u_q.values
    np.testing.assert_allclose(two, 2.0 * one, rtol=1e-9, atol=0)


def test_plant_input_is_the_integrated_controller_output():
    traj = closedloop.simulate(_ex1().with_grid(t_end=6.0, dt=2e-3))
    u_p = traj.u_q.values
    for _ in range(2):
        u_p = cumulative_trapezoid(u_p, traj.u_q.times, initial=0.0)
    np.testing.assert_allclose(traj.u_p.values, u_p, rtol=0, atol=1e-4)


def test_loop_signals_are_consistent():
    traj = closedloop.simulate(_ex1().with_grid(t_end=2.0))
    np.testing.assert_allclose(traj.u_c.values, traj.y_p.values + traj.y_a.values)
    np.testing.assert_allclose(traj.u_p.values, traj.y_p.values)
    assert traj.u_q.values[0] == 0.0
    assert set(traj.signals()) == {'u_q', 'u_c', 'u_p', 'y_p', 'y_a'}


def test_growth_guard_truncates_the_run(caplog):
    config = _ex1(tolerances=Tolerances(sup_guard=1.0))
    traj = closedloop.simulate(config)
    assert traj.growth_detected_at is not None
    assert traj.growth_detected_at < 10.0
    assert len(traj.u_q) < config.grid.n
    assert all(len(s) == len(traj.u_q) for s in traj.signals().values())
    assert 'exceeded' in caplog.text


def test_build_kernels_for_a_unity_plant():
    config = _ex1().with_grid(t_end=2.0, dt=0.02)
    kernels = closedloop.build_kernels(config)
    assert isinstance(kernels.g_p, DeltaKernel)
    assert isinstance(kernels.g_q, IntegratorKernel)
    assert kernels.G_cp is kernels.g_c
    assert kernels.lvie_kernel is kernels.G_cpq
    negative = closedloop.build_kernels(config.with_changes(feedback_sign=-1))
    np.testing.assert_allclose(negative.lvie_kernel.values, -kernels.G_cpq.values)


def test_cross_validation_converges():
    config = _ex1().with_grid(t_end=3.0, dt=4e-3)
    check = closedloop.cross_validate(config, refine=True)
    assert check.sup_diff < 5e-3
    assert check.passed
    assert check.ratio >= 3.0
    assert set(check.to_dict()) == {'sup_diff', 'tolerance', 'passed', 'refined_sup_diff', 'ratio'}


@pytest.mark.parametrize('name, a, h', [('ex1', 0, 1.0), ('ex1', 1, 1.0), ('ex2', 1, 0.1)])
def test_cross_validation_converges_for_other_attacks(name, a, h):
    config = preset(name).with_changes(attack=AttackSpec(a, h)).with_grid(t_end=3.0, dt=4e-3)
    check = closedloop.cross_validate(config, refine=True)
    assert check.passed
    assert check.sup_diff <= 5e-3
    assert check.ratio >= 3.0


def test_row_integral_maximum_is_stable_under_refinement():
    config = preset('ex1').with_grid(t_end=6.0, dt=0.01)
    coarse = np.max(row_integrals(closedloop.build_kernels(config).G_cpq))
    fine = np.max(row_integrals(closedloop.build_kernels(config.with_grid(dt=5e-3)).G_cpq))
    assert abs(coarse - fine) <= 0.01 * fine


def test_cross_validation_with_a_lag_plant():
    document = preset_dict('ex1')
    document.update(
        plant={'A': [[-1]], 'B': [[1]], 'C': [[1]]},
        attack={'a': 1, 'h': 1.0},
        grid={'t_end': 4.0, 'dt': 5e-3},
        loop={'feedback_sign': -1},
    )
    config = config_from_dict(document)
    traj = closedloop.simulate(config)
    np.testing.assert_allclose(traj.u_c.values, traj.y_a.values - traj.y_p.values)
    assert closedloop.cross_validate(config, trajectories=traj).passed


def test_export_trajectories_csv(tmpdir):
    traj = closedloop.simulate(_ex1().with_grid(t_end=1.0, dt=0.1))
    path = str(tmpdir.join('trajectories.csv'))
    closedloop.export_trajectories_csv(traj, path)
    with open(path) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ['t', 'u_q', 'u_c', 'u_p', 'y_p', 'y_a']
    assert len(rows) == 12
    assert float(rows[-1][0]) == 1.0
    assert float(rows[-1][5]) == 0.5


def test_uq_via_lvie_matches_the_simulation():
    config = _ex1().with_grid(t_end=3.0, dt=4e-3)
    u_q = closedloop.uq_via_lvie(config)
    traj = closedloop.simulate(config)
    assert u_q.grid.n == traj.u_q.grid.n
    assert np.max(np.abs(u_q.values - traj.u_q.values)) < 5e-3
