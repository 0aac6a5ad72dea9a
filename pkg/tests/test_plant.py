import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funnelquad.errors import SingularityError
from funnelquad.plant import (ControlCommand, DisturbanceSpec, QuadParams, VehicleState,
                              disturbance, dynamics_rhs)
from funnelquad.sim import rk4_step

P = QuadParams()
NONE = DisturbanceSpec()
HOVER = ControlCommand(P.m * P.g, np.zeros(3))


def test_state_validation():
    with pytest.raises(ValueError):
        VehicleState(np.zeros(2), np.zeros(3), np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        VehicleState(np.zeros(3), [0, math.nan, 0], np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        VehicleState(np.zeros(3), np.zeros(3), [math.pi / 2, 0, 0], np.zeros(3))
    s = VehicleState(np.zeros(3), np.zeros(3), [0, 0, 3 * math.pi], np.zeros(3))
    assert s.eta[2] == pytest.approx(math.pi)
    assert VehicleState.from_array(s.as_array()) == s


def test_params_validation():
    with pytest.raises(ValueError):
        QuadParams(m=0)
    with pytest.raises(ValueError):
        QuadParams(inertia_diag=(0.01, -0.01, 0.02))
    with pytest.raises(ValueError):
        DisturbanceSpec("gusty")
    with pytest.raises(ValueError):
        ControlCommand(math.inf, np.zeros(3))


def test_hover_rhs_is_zero():
    assert np.all(dynamics_rhs(VehicleState.zero(), HOVER, NONE, P, 0.0) == 0)


def test_free_fall():
    dx = dynamics_rhs(VehicleState.zero(), ControlCommand(0, np.zeros(3)), NONE, P, 0.0)
    np.testing.assert_array_equal(dx[:5], 0)
    assert dx[5] == -9.81


def test_kinematics_examples():
    s = VehicleState(np.zeros(3), [1, 2, 3], np.zeros(3), [0.1, 0.2, 0.3])
    dx = dynamics_rhs(s, HOVER, NONE, P, 0.0)
    np.testing.assert_array_equal(dx[:3], [1, 2, 3])
    np.testing.assert_allclose(dx[6:9], [0.1, 0.2, 0.3], atol=1e-15)


def test_thrust_direction_matches_rotation():
    from funnelquad.attitude import rot_body_to_inertial
    eta = [0.2, -0.3, 0.7]
    s = VehicleState(np.zeros(3), np.zeros(3), eta, np.zeros(3))
    dx = dynamics_rhs(s, ControlCommand(5.0, np.zeros(3)), NONE, QuadParams(m=2.0), 0.0)
    expected = rot_body_to_inertial(eta) @ [0, 0, 5.0] / 2.0 - [0, 0, 9.81]
    np.testing.assert_allclose(dx[3:6], expected, atol=1e-14)


def test_torque_response():
    dx = dynamics_rhs(VehicleState.zero(), ControlCommand(9.81, [0.01, 0.02, 0.04]), NONE, P, 0.0)
    np.testing.assert_allclose(dx[9:], [1, 2, 2], rtol=1e-14)


@settings(max_examples=500, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3),
       st.lists(st.floats(1e-3, 1), min_size=3, max_size=3))
def test_gyroscopic_term_does_no_work(omega, inertia):
    w = np.array(omega)
    I = np.array(inertia)
    s = VehicleState(np.zeros(3), np.zeros(3), np.zeros(3), w)
    dx = dynamics_rhs(s, ControlCommand(0.0, np.zeros(3)), NONE, QuadParams(inertia_diag=I), 0.0)
    # with zero torque, I*omega_dot = -omega x I omega
    power = float(w @ (I * dx[9:]))
    assert abs(power) <= 1e-12 * max(1.0, float(np.abs(w).max()) ** 2 * float(I.max()) * np.abs(w).max())


def test_gyroscopic_cross_product():
    w = np.array([1.0, -2.0, 0.5])
    I = np.array([0.01, 0.02, 0.03])
    s = VehicleState(np.zeros(3), np.zeros(3), np.zeros(3), w)
    dx = dynamics_rhs(s, ControlCommand(0.0, np.zeros(3)), NONE, QuadParams(inertia_diag=I), 0.0)
    np.testing.assert_allclose(I * dx[9:], -np.cross(w, I * w), atol=1e-15)


def test_singular_attitude():
    x = np.zeros(12)
    x[7] = math.pi / 2
    with pytest.raises(SingularityError):
        dynamics_rhs(x, HOVER, NONE, P, 0.0)


def test_disturbance_kinds():
    x = VehicleState(np.zeros(3), [1, 2, 3], np.zeros(3), [0.1, 0.2, 0.3])
    f, tau = disturbance(NONE, x, 1.0)
    assert not f.any() and not tau.any()
    f, tau = disturbance(DisturbanceSpec("constant", [1, 2, 3], [4, 5, 6]), x, 7.0)
    np.testing.assert_array_equal(f, [1, 2, 3])
    np.testing.assert_array_equal(tau, [4, 5, 6])
    f, tau = disturbance(DisturbanceSpec("sinusoid", [1, 1, 1], [2, 2, 2], 2.0), x, 0.5)
    np.testing.assert_allclose(f, [math.sin(1.0)] * 3)
    np.testing.assert_allclose(tau, [2 * math.sin(1.0)] * 3)
    f, tau = disturbance(DisturbanceSpec("linear_drag", [1, 1, 2], [1, 1, 1]), x, 0.0)
    np.testing.assert_allclose(f, [-1, -2, -6])
    np.testing.assert_allclose(tau, [-0.1, -0.2, -0.3])


def test_disturbance_enters_dynamics():
    spec = DisturbanceSpec("constant", [0.5, 0, 0], [0, 0, 0.02])
    dx = dynamics_rhs(VehicleState.zero(), HOVER, spec, QuadParams(m=2.0, inertia_diag=(1, 1, 0.01)), 0.0)
    assert dx[3] == pytest.approx(0.25)
    assert dx[11] == pytest.approx(2.0)


def hover_drift(duration=1.0, dt=1e-3):
    x = np.zeros(12)
    t = 0.0
    rhs = lambda t_, x_: dynamics_rhs(x_, HOVER, NONE, P, t_)
    for _ in range(int(round(duration / dt))):
        x = rk4_step(rhs, x, t, dt)
        t += dt
    return float(np.max(np.abs(x)))


def test_hover_equilibrium_drift():
    assert hover_drift() < 1e-9
