import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from bezier_tpbvp.errors import DomainError, DynamicsDomainError, IntegrationError, ShootingError
from bezier_tpbvp.orbit import TwoBodyParams, builtin_catalog, canonical_scaling, velocity_unit
from bezier_tpbvp.problem import BvpProblem, make_paper_1d_problem
from bezier_tpbvp.shooting import (
    IntegratorConfig,
    ShootingConfig,
    integrate_ivp,
    shoot,
    shoot_1d,
    shoot_nd,
    terminal_miss,
)

MU = 398600.0
PAPER = make_paper_1d_problem()


def reintegrate(problem, v, t_f=None):
    """Independent DOP853 propagation of the augmented system; returns x(t_f)."""
    m = problem.dimension

    def rhs(t, y):
        return np.concatenate([y[m:], problem.dynamics(np.float64(t), y[:m], y[m:])])

    sol = solve_ivp(rhs, (problem.t_i, t_f or problem.t_f), np.concatenate([problem.x_i, v]),
                    method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y[:m, -1]


def zero_problem(x_i=0.0, x_f=1.0):
    return BvpProblem(lambda t, x, xd: np.zeros_like(x), 0.0, 1.0, [x_i], [x_f])


def circular_problem(periods=1.0):
    r0 = 7000.0
    period = 2 * math.pi * math.sqrt(r0**3 / MU)
    return BvpProblem(
        lambda t, r, v: -MU * r / np.linalg.norm(r, axis=-1, keepdims=True) ** 3,
        0.0, periods * period, [r0, 0.0, 0.0], [r0, 0.0, 0.0],
        admissible=lambda t, r: np.linalg.norm(r, axis=-1) > 1e-6,
    ), np.array([0.0, math.sqrt(MU / r0), 0.0])


# integrator ------------------------------------------------------------------

def test_paper_exact_slope_hits_terminal_value():
    traj = integrate_ivp(PAPER, [-14.0])
    assert traj.t[0] == 1.0 and traj.x[0, 0] == 17.0 and traj.xdot[0, 0] == -14.0
    assert traj.t[-1] == 3.0
    assert abs(traj.final_state[0] - 43.0 / 3.0) < 1e-6
    assert abs(terminal_miss(PAPER, [-14.0])[0]) < 1e-6


def test_dense_samples_follow_exact_solution():
    traj = integrate_ivp(PAPER, [-14.0])
    t = np.linspace(1, 3, 41)
    x, xd = traj.sample(t)
    np.testing.assert_allclose(x[:, 0], t**2 + 16 / t, atol=1e-7)
    np.testing.assert_allclose(xd[:, 0], 2 * t - 16 / t**2, atol=1e-7)


def test_circular_orbit_returns_after_one_period():
    problem, v0 = circular_problem()
    final = integrate_ivp(problem, v0, IntegratorConfig(rtol=1e-12, atol=1e-9)).final_state
    assert np.linalg.norm(final - problem.x_i) < 1e-4


def test_zero_dynamics_straight_line():
    problem = zero_problem(0.0, 1.0)
    assert integrate_ivp(problem, [1.0]).final_state[0] == pytest.approx(1.0, abs=1e-14)
    assert terminal_miss(zero_problem(0.5, 0.5), [0.0])[0] == 0.0


def test_integrator_tolerance_reduces_error():
    problem, v0 = circular_problem(periods=0.5)
    exact = -problem.x_i  # half a revolution
    errors = []
    for tol in (1e-6, 1e-7, 1e-8):
        final = integrate_ivp(problem, v0, IntegratorConfig(rtol=tol, atol=tol * 1e-2)).final_state
        errors.append(np.linalg.norm(final - exact))
    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= coarse / 10 or fine < 1e-10 * 7000


def test_step_exhaustion_and_bad_input():
    with pytest.raises(IntegrationError):
        integrate_ivp(PAPER, [-14.0], IntegratorConfig(max_steps=2))
    with pytest.raises(DomainError):
        integrate_ivp(PAPER, [np.nan])
    with pytest.raises(DomainError):
        IntegratorConfig(rtol=0.0)


def test_collision_course_is_reported():
    problem = BvpProblem(
        lambda t, r, v: -r / np.linalg.norm(r, axis=-1, keepdims=True) ** 3,
        0.0, 5.0, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
        admissible=lambda t, r: np.linalg.norm(r, axis=-1) > 1e-3,
    )
    with pytest.raises((DynamicsDomainError, IntegrationError)):
        integrate_ivp(problem, [0.0, 0.0, 0.0], IntegratorConfig(max_steps=100_000))


# scalar shooting ---------------------------------------------------------------

def test_shoot_1d_from_bezier_scale_guess():
    out = shoot_1d(PAPER, -14.6147)
    assert out.converged
    assert out.xdot_i[0] == pytest.approx(-14.0, abs=1e-6)
    assert out.terminal_residual < 1e-8
    assert out.iterations_bracket <= 5
    assert out.iterations_root >= 1


def test_shoot_1d_far_guess_needs_more_expansions():
    near = shoot_1d(PAPER, -14.6147)
    far = shoot_1d(PAPER, 0.0)
    assert far.converged and far.xdot_i[0] == pytest.approx(-14.0, abs=1e-6)
    assert far.iterations_bracket > near.iterations_bracket


def test_shoot_1d_linear_problem():
    out = shoot_1d(zero_problem(0.0, 1.0), 1.0)
    assert out.converged and out.iterations_root <= 1
    assert out.xdot_i[0] == pytest.approx(1.0)
    out = shoot_1d(zero_problem(0.0, 1.0), 0.7)
    assert out.converged and out.xdot_i[0] == pytest.approx(1.0, abs=1e-8)


def test_shoot_1d_bracket_failure():
    # x'' = -x'^3 keeps x(1) below sqrt(2), so x_f = 100 is unreachable
    problem = BvpProblem(lambda t, x, xd: -xd**3, 0.0, 1.0, [0.0], [100.0])
    with pytest.raises(ShootingError) as info:
        shoot_1d(problem, 1.0, ShootingConfig(max_expansions=8))
    assert info.value.outcome is not None and not info.value.outcome.converged
    assert info.value.outcome.iterations_bracket == 8


def test_shoot_1d_bookkeeping_identity():
    for guess in (-14.6147, 0.0, -20.0):
        out = shoot_1d(PAPER, guess)
        assert out.iterations_root == out.n_fev - out.n_fev_bracket - out.n_fev_jacobian - out.n_fev_backtrack
        assert out.n_fev_bracket == 1 + 2 * out.iterations_bracket


def test_shoot_dimension_checks():
    with pytest.raises(DomainError):
        shoot_1d(circular_problem()[0], 1.0)
    with pytest.raises(DomainError):
        shoot_nd(circular_problem()[0], [1.0, 2.0])


# vector shooting ---------------------------------------------------------------

def _orbit_setup(case_id):
    case = builtin_catalog()[case_id]
    params = TwoBodyParams()
    du, _ = canonical_scaling(params, case.r_i_km)
    return case, case.problem(params), velocity_unit(params, case), ShootingConfig(tol_bc=1e-3 / du)


@pytest.mark.parametrize("case_id", ["1", "3-3"])
def test_shoot_nd_from_published_guess(case_id):
    case, problem, vu, config = _orbit_setup(case_id)
    out = shoot_nd(problem, np.array(case.ref_guess_kms) / vu, config)
    assert out.converged
    v = out.xdot_i * vu
    np.testing.assert_allclose(v, case.ref_shooting_kms, atol=0.005)
    assert np.linalg.norm(v) == pytest.approx(case.ref_speed_kms, abs=0.001)
    assert out.iterations_bracket == 0
    assert out.iterations_root == out.n_fev - out.n_fev_bracket - out.n_fev_jacobian - out.n_fev_backtrack
    assert out.n_fev_jacobian == 3 * out.iterations_root


def test_shoot_nd_fixed_point():
    case, problem, vu, config = _orbit_setup("2-2")
    solved = shoot_nd(problem, np.array(case.ref_guess_kms) / vu, config)
    again = shoot_nd(problem, solved.xdot_i, config)
    assert again.converged and again.iterations_root <= 1


def test_shoot_nd_soundness_by_independent_reintegration():
    case, problem, vu, config = _orbit_setup("2-3")
    out = shoot(problem, np.array(case.ref_guess_kms) / vu, config)
    miss = reintegrate(problem, out.xdot_i) - problem.x_f
    du = np.linalg.norm(case.r_i_km)
    assert np.linalg.norm(miss) * du <= 1e-3


def test_terminal_miss_of_published_solution_case1():
    case, problem, vu, _ = _orbit_setup("1")
    miss = terminal_miss(problem, np.array(case.ref_shooting_kms) / vu)
    # three published decimals: half-unit rounding drifts ~ 0.0005 km/s * tof per axis
    bound = 2 * np.sqrt(3) * 0.0005 * case.tof_s
    assert np.linalg.norm(miss) * np.linalg.norm(case.r_i_km) < bound


def test_shoot_nd_newton_limit():
    case, problem, vu, config = _orbit_setup("3-3")
    config.max_newton = 1
    with pytest.raises(ShootingError) as info:
        shoot_nd(problem, np.array([1.0, 1.0, 1.0]) / vu, config)
    assert info.value.outcome is not None and not info.value.outcome.converged
