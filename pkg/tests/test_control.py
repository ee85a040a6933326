import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.linalg import expm

from relrocket import (
    DomainError,
    GainVector,
    KinematicState,
    Model,
    PIDGains,
    PIDState,
    RocketParams,
    SpeedLimitError,
    UnreachableStateError,
    controllability_gramian,
    is_relativistically_reachable,
    linearized_system,
    min_energy_steering,
    output_feedback,
    pid_control,
    place_poles,
    state_feedback,
    to_physical,
)
from relrocket.control import pd_output_law, proportional_output_law

A = np.array([[0.0, 1.0], [0.0, 0.0]])


def params_with_b(b, c=1.0):
    """m0 = 1 and vbar = -b; c is raised when |b| > 1 so that vbar <= c."""
    return RocketParams(m0=1.0, vbar=-b, c=max(c, -b))


def closed_loop_eigs(params, K):
    sys = linearized_system(params)
    return np.linalg.eigvals(sys.A - sys.B @ K.as_array())


def quad_gramian(b, t0, T):
    B = np.array([[0.0], [b]])
    W = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            W[i, j] = quad(lambda s: (expm(A * (T - s)) @ B @ B.T @ expm(A.T * (T - s)))[i, j],
                           t0, T, epsabs=1e-14)[0]
    return W


def forward(plan, x0, b):
    """x(T) = e^{A D} x0 + integral of e^{A (T - s)} B w(s) ds by quadrature."""
    B = np.array([0.0, b])
    drift = expm(A * (plan.T - plan.t0)) @ np.asarray(x0, float)
    forced = [quad(lambda s: (expm(A * (plan.T - s)) @ B)[i] * plan.w(s), plan.t0, plan.T,
                   epsabs=1e-13)[0] for i in range(2)]
    return drift + np.array(forced)


# ---------------------------------------------------------------- pole placement


@pytest.mark.parametrize("b, poles, expected", [
    (-1.0, (-1.0, -1.0), (-1.0, -2.0)),
    (-1.0, (-1.0, -2.0), (-2.0, -3.0)),
    (-2.0, (-1.0, -1.0), (-0.5, -1.0)),
])
def test_place_poles_examples(b, poles, expected):
    params = params_with_b(b)
    K = place_poles(params, poles)
    assert (K.k1, K.k2) == pytest.approx(expected, rel=1e-15)
    eigs = np.sort_complex(closed_loop_eigs(params, K))
    np.testing.assert_allclose(eigs, np.sort_complex(np.array(poles, complex)), atol=1e-7)


def test_place_poles_complex_pair(unit_params):
    K = place_poles(unit_params, (-1 + 2j, -1 - 2j))
    # s^2 + 2s + 5
    assert (K.k1, K.k2) == pytest.approx((-5.0, -2.0))


def test_place_poles_rejects_unpaired_complex(unit_params):
    with pytest.raises(DomainError):
        place_poles(unit_params, (-1 + 1j, -2 + 0j))


@given(re1=st.floats(-10, -0.1), re2=st.floats(-10, -0.1), im=st.floats(0, 5),
       complex_pair=st.booleans(), b=st.floats(-10, -0.1))
def test_place_poles_property(re1, re2, im, complex_pair, b):
    poles = (complex(re1, im), complex(re1, -im)) if complex_pair else (re1, re2)
    params = params_with_b(b)
    K = place_poles(params, poles)
    got = closed_loop_eigs(params, K)
    # characteristic polynomial coefficients are the well-conditioned comparison
    np.testing.assert_allclose(np.poly(got), np.real(np.poly(poles)), rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------- state / output feedback


def test_state_feedback_examples(unit_params):
    K = GainVector(-1.0, -2.0)
    assert state_feedback(KinematicState(0.0, 0.0), K, unit_params) == 0.0
    assert state_feedback(KinematicState(1.0, 0.0), K, unit_params) == 1.0
    K2 = GainVector(0.0, 0.7)
    assert state_feedback(KinematicState(0.0, 0.6), K2, unit_params) == pytest.approx(
        0.9765625 * (-0.7 * 0.6), rel=1e-14)
    with pytest.raises(SpeedLimitError):
        state_feedback(KinematicState(0.0, 1.0), K2, unit_params)


@given(p=st.floats(-100, 100), v=st.floats(-0.99, 0.99), k1=st.floats(-5, 5), k2=st.floats(-5, 5))
def test_state_feedback_is_compensated_linear_law(p, v, k1, k2):
    params = RocketParams.natural(m0=1.0, vbar=0.5)
    K = GainVector(k1, k2)
    x = KinematicState(p, v)
    assert state_feedback(x, K, params) == to_physical(-(k1 * p + k2 * v), v, params)


def test_output_feedback_examples(unit_params):
    assert output_feedback(2.0, 0.3, lambda y: 0.0, unit_params) == 0.0
    assert output_feedback(2.0, 0.0, lambda y: -y, unit_params) == -2.0
    assert output_feedback(2.0, 0.6, lambda y: -y, unit_params) == pytest.approx(-1.953125,
                                                                                 rel=1e-14)
    with pytest.raises(SpeedLimitError):
        output_feedback(2.0, 1.0, lambda y: -y, unit_params)


def test_output_feedback_presets():
    law = proportional_output_law(2.0, reference=1.0)
    assert law(0.25) == 1.5
    pd = pd_output_law(2.0, 0.5, ydot=lambda: 0.4, reference=1.0)
    assert pd(0.25) == pytest.approx(1.5 - 0.2)


# ---------------------------------------------------------------- PID


def test_pid_examples(unit_params):
    u, _ = pid_control(1.0, PIDState(), 0.0, PIDGains(kp=2.0), 0.0, unit_params)
    assert u == 2.0
    u, _ = pid_control(0.0, PIDState(), 0.0, PIDGains(kp=2.0, ki=1.0, kd=1.0), 0.0, unit_params)
    assert u == 0.0


def test_pid_compensator_uses_velocity_implied_by_error_rate(unit_params):
    # constant reference: e_dot = -0.6 means v = 0.6, where g = 0.5 * 1.953125
    u, _ = pid_control(1.0, PIDState(), -0.6, PIDGains(kp=1.0), 0.0, unit_params)
    assert u == pytest.approx(0.9765625, rel=1e-14)


def test_pid_time_varying_reference(unit_params):
    # r_dot = 0.2, e_dot = -0.4 -> v = 0.6
    u, _ = pid_control(1.0, PIDState(), -0.4, PIDGains(kp=1.0), 0.0, unit_params,
                       reference_rate=0.2)
    assert u == pytest.approx(0.9765625 * 1.0, rel=1e-14)


def test_pid_trapezoidal_integral_and_clamp(unit_params):
    gains = PIDGains(kp=0.0, ki=1.0)
    state = PIDState()
    _, state = pid_control(1.0, state, 0.0, gains, 0.1, unit_params)
    assert state.integral == pytest.approx(0.1)  # first sample: no previous error
    _, state = pid_control(3.0, state, 0.0, gains, 0.1, unit_params)
    assert state.integral == pytest.approx(0.1 + 0.5 * (1.0 + 3.0) * 0.1)
    clamped = PIDState(integral_limit=0.05)
    u, clamped = pid_control(1.0, clamped, 0.0, gains, 1.0, unit_params)
    assert clamped.integral == 0.05 and u == 0.05
    assert clamped.reset().integral == 0.0 and clamped.reset().prev_error is None


def test_pid_rejects_light_speed_error_rate(unit_params):
    with pytest.raises(SpeedLimitError):
        pid_control(1.0, PIDState(), -1.0, PIDGains(kp=1.0), 0.0, unit_params)


@given(e=st.floats(-10, 10), integral=st.floats(-10, 10), kp=st.floats(-5, 5),
       ki=st.floats(-5, 5), kd=st.floats(-5, 5))
def test_pid_degenerates_to_textbook_at_zero_error_rate(e, integral, kp, ki, kd):
    params = RocketParams.natural(m0=1.0, vbar=0.3)
    u, _ = pid_control(e, PIDState(integral=integral), 0.0, PIDGains(kp, ki, kd), 0.0, params)
    assert u == kp * e + ki * integral + kd * 0.0


def test_critically_damped_gains(unit_params):
    g = PIDGains.critically_damped(unit_params, 2.0)
    # s^3 + b kd s^2 + b kp s + b ki = (s + 2)^3 with b = -1
    assert (g.kp, g.ki, g.kd) == (-12.0, -8.0, -6.0)
    assert np.poly([-2, -2, -2]) == pytest.approx([1, -g.kd, -g.kp, -g.ki])


# ---------------------------------------------------------------- Gramian and steering


@pytest.mark.parametrize("b, t0, T, expected", [
    (-1.0, 0.0, 1.0, [[1 / 3, 1 / 2], [1 / 2, 1.0]]),
    (-2.0, 0.0, 1.0, [[4 / 3, 2.0], [2.0, 4.0]]),
    (-0.5, 1.0, 3.5, [[1.302083333333333, 0.78125], [0.78125, 0.625]]),
])
def test_gramian_examples(b, t0, T, expected):
    W = controllability_gramian(params_with_b(b), t0, T)
    np.testing.assert_allclose(W, expected, rtol=1e-14)
    np.testing.assert_allclose(W, quad_gramian(b, t0, T), rtol=1e-10)


def test_gramian_vanishes_with_horizon(unit_params):
    assert np.abs(controllability_gramian(unit_params, 0.0, 1e-9)).max() < 1e-8
    with pytest.raises(DomainError):
        controllability_gramian(unit_params, 1.0, 1.0)


@given(b=st.floats(-10, -0.1), d=st.floats(0.01, 10))
def test_gramian_spd_and_scaling(b, d):
    W = controllability_gramian(params_with_b(b), 0.0, d)
    np.testing.assert_array_equal(W, W.T)
    assert np.all(np.linalg.eigvalsh(W) > 0)
    W1 = controllability_gramian(params_with_b(-1.0), 0.0, d)
    np.testing.assert_allclose(W, b * b * W1, rtol=1e-14)


def test_steering_canonical_example(unit_params):
    plan = min_energy_steering(KinematicState(0, 0), KinematicState(1, 0), 0.0, 1.0, unit_params)
    s = np.linspace(0, 1, 101)
    np.testing.assert_allclose(plan.w(s), 12 * s - 6, atol=1e-12)
    assert plan.coefficients == pytest.approx((-6.0, 12.0), abs=1e-12)
    np.testing.assert_allclose(forward(plan, (0, 0), -1.0), [1.0, 0.0], atol=1e-10)


def test_steering_to_velocity_target():
    # v = 1 is only reachable when c > 1; b = -1 still
    params = RocketParams(m0=1.0, vbar=1.0, c=2.0)
    plan = min_energy_steering(KinematicState(0, 0), KinematicState(0, 1), 0.0, 1.0, params)
    # lam = W^-1 (0, 1) = (-6, 4), w(s) = 2 - 6 s
    np.testing.assert_allclose(plan.w(np.array([0.0, 0.5, 1.0])), [2.0, -1.0, -4.0], atol=1e-12)
    np.testing.assert_allclose(forward(plan, (0, 0), -1.0), [0.0, 1.0], atol=1e-10)


def test_steering_trivial_when_at_target(unit_params):
    x = KinematicState(0.3, 0.0)
    plan = min_energy_steering(x, x, 0.0, 2.0, unit_params)
    assert plan.lam == (0.0, 0.0)


def test_steering_rejects_unreachable_endpoints(unit_params):
    with pytest.raises(UnreachableStateError, match="not reachable"):
        min_energy_steering(KinematicState(0, 0), KinematicState(1, 1.1), 0.0, 1.0, unit_params)
    with pytest.raises(UnreachableStateError):
        min_energy_steering(KinematicState(0, -1.0), KinematicState(1, 0), 0.0, 1.0, unit_params)


@given(p0=st.floats(-5, 5), v0=st.floats(-0.9, 0.9), pT=st.floats(-5, 5), vT=st.floats(-0.9, 0.9),
       T=st.floats(0.5, 5))
def test_steering_reaches_target(p0, v0, pT, vT, T):
    params = RocketParams.natural(m0=2.0, vbar=1.0)
    plan = min_energy_steering(KinematicState(p0, v0), KinematicState(pT, vT), 0.0, T, params)
    # closed form of the double integrator under w = a0 + a1 s
    a0, a1 = plan.coefficients
    b = params.b
    v_end = v0 + b * (a0 * T + a1 * T**2 / 2)
    p_end = p0 + v0 * T + b * (a0 * T**2 / 2 + a1 * T**3 / 6)
    scale = math.hypot(pT, vT) + 1.0
    assert abs(p_end - pT) <= 1e-6 * scale and abs(v_end - vT) <= 1e-6 * scale


def test_reachability_predicate(unit_params):
    assert is_relativistically_reachable(KinematicState(0, 0), unit_params)
    assert not is_relativistically_reachable(KinematicState(0, 1.1), unit_params)
    assert is_relativistically_reachable(KinematicState(0, 0.999), unit_params)
    assert not is_relativistically_reachable(KinematicState(0, math.nan), unit_params)
    assert is_relativistically_reachable(KinematicState(0, 5.0),
                                         unit_params.with_model(Model.CLASSICAL))
