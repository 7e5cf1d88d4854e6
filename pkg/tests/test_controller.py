"""Geometric controller and allocation checks."""

import numpy as np
import pytest

from quadfault import quat
from quadfault.controller import (AttitudeSingularityError, DegenerateThrustError,
                                  Gains, GeometricController, IntegralBaseline,
                                  accel_command, allocate, allocation_request,
                                  attitude_error, compute_b3, desired_attitude,
                                  desired_omega, gyroscopic_torque,
                                  moment_command, rate_error, thrust_command)
from quadfault.trajectories import TrajectorySpec, TrajectoryKind, setpoint
from quadfault.vehicle import VehicleParams, Wrench

PARAMS = VehicleParams()
GAINS = Gains()


def test_allocation_round_trip():
    # mixer followed by its inverse reproduces the wrench to 1e-9
    rng = np.random.default_rng(30)
    mix = PARAMS.mixing_matrix()
    for _ in range(300):
        f = rng.uniform(2.0, 0.9 * PARAMS.max_thrust)
        m = rng.uniform(-0.2, 0.2, 3)
        speeds, clipped = allocate(Wrench(f=f, moment=m), PARAMS)
        if clipped.any():
            continue
        out = mix @ (speeds ** 2)
        assert np.allclose(out, [f, m[0], m[1], m[2]], rtol=0, atol=1e-9)


def test_allocate_hover_speeds():
    speeds, clipped = allocate(Wrench(f=PARAMS.weight, moment=np.zeros(3)), PARAMS)
    assert not clipped.any()
    assert np.allclose(speeds, PARAMS.hover_speed, rtol=1e-12)


def test_allocate_flags_negative_omega_squared():
    # huge roll moment at low thrust forces a negative omega^2 on one side
    w = Wrench(f=0.5, moment=np.array([2.0, 0.0, 0.0]))
    speeds, clipped = allocate(w, PARAMS)
    assert clipped.any()
    assert np.all(speeds >= 0.0)


def test_allocate_caps_at_omega_max():
    w = Wrench(f=1.5 * PARAMS.max_thrust, moment=np.zeros(3))
    speeds, clipped = allocate(w, PARAMS)
    assert clipped.all()
    assert np.allclose(speeds, PARAMS.omega_max)


def test_allocation_request_uncapped():
    w = Wrench(f=1.5 * PARAMS.max_thrust, moment=np.zeros(3))
    req = allocation_request(w, PARAMS)
    assert np.all(req > PARAMS.omega_max)
    # and it agrees with allocate() whenever nothing clips
    w2 = Wrench(f=PARAMS.weight, moment=np.array([0.05, -0.03, 0.01]))
    speeds, clipped = allocate(w2, PARAMS)
    assert not clipped.any()
    assert np.allclose(allocation_request(w2, PARAMS), speeds, rtol=1e-12)


def test_accel_command_hover_identity():
    sp = setpoint(TrajectorySpec(), 10.0)
    a = accel_command(sp.p_d, np.zeros(3), sp, GAINS, PARAMS.gravity)
    assert np.allclose(a, [0.0, 0.0, PARAMS.gravity], atol=1e-12)


def test_thrust_command_projection():
    # level attitude, pure vertical command: f = m * a_z; tilted: cosine loss
    a = np.array([0.0, 0.0, 12.0])
    q_level = np.array([1.0, 0.0, 0.0, 0.0])
    assert np.isclose(thrust_command(a, q_level, PARAMS), PARAMS.mass * 12.0)
    th = 0.3
    q_tilt = np.array([np.cos(th / 2), np.sin(th / 2), 0.0, 0.0])
    assert np.isclose(thrust_command(a, q_tilt, PARAMS),
                      PARAMS.mass * 12.0 * np.cos(th), rtol=1e-12)


def test_thrust_command_clamps():
    q = np.array([1.0, 0.0, 0.0, 0.0])
    assert thrust_command(np.array([0, 0, -5.0]), q, PARAMS) == 0.0
    big = np.array([0, 0, 1e4])
    assert thrust_command(big, q, PARAMS) == PARAMS.max_thrust


def test_compute_b3_degenerate():
    with pytest.raises(DegenerateThrustError):
        compute_b3(np.zeros(3))


def test_desired_attitude_composition():
    b3 = np.array([0.1, -0.2, 0.97])
    b3 /= np.linalg.norm(b3)
    q_d = desired_attitude(b3, 0.4)
    assert np.allclose(quat.body_z(q_d), b3, atol=1e-10)
    assert np.isclose(quat.yaw_of(q_d), 0.4, atol=1e-9)


def test_desired_attitude_singularity():
    with pytest.raises(AttitudeSingularityError):
        desired_attitude(np.array([0.0, 0.0, -1.0]), 0.0)


def test_attitude_error_small_angle():
    # for a small rotation about axis n, the error approaches the angle * n
    n = np.array([1.0, 0.0, 0.0])
    th = 1e-4
    R_d = np.eye(3)
    R = quat.to_matrix(np.array([np.cos(th / 2), np.sin(th / 2), 0.0, 0.0]))
    e = attitude_error(R, R_d)
    assert np.allclose(e, th * n, rtol=1e-6)


def test_attitude_error_zero_at_alignment():
    q = quat.normalize(np.array([0.9, 0.1, -0.2, 0.3]))
    R = quat.to_matrix(q)
    assert np.allclose(attitude_error(R, R), 0.0, atol=1e-15)


def test_desired_omega_pure_yaw():
    # analytic case: spinning yaw reference, omega_d = psi_dot * e3
    psi_dot = 0.7
    q_d = quat.from_yaw(0.3)
    # q_dot for yaw spin: d/dt [cos(p/2),0,0,sin(p/2)] = p_dot/2 [-sin,0,0,cos]
    q_d_dot = 0.5 * psi_dot * np.array([-np.sin(0.15), 0.0, 0.0, np.cos(0.15)])
    om = desired_omega(q_d, q_d_dot)
    assert np.allclose(om, [0.0, 0.0, psi_dot], atol=1e-12)


def test_gyroscopic_torque_cross_product():
    rng = np.random.default_rng(31)
    for _ in range(20):
        om = rng.standard_normal(3)
        assert np.allclose(gyroscopic_torque(om, PARAMS),
                           np.cross(om, PARAMS.inertia @ om), atol=1e-12)


def test_moment_command_signs():
    e_R = np.array([0.1, 0.0, 0.0])
    M = moment_command(e_R, np.zeros(3), np.zeros(3), PARAMS, GAINS)
    assert M[0] < 0  # drives the error down
    assert np.allclose(M[1:], 0.0)


def test_controller_steady_hover_command():
    spec = TrajectorySpec()
    traj = lambda t: setpoint(spec, t)
    ctrl = GeometricController(PARAMS, GAINS, 0.002)
    p = spec.start_point()
    w, dbg = ctrl.command(5.0, p, np.zeros(3), quat.IDENTITY.copy(), np.zeros(3), traj)
    assert np.isclose(w.f, PARAMS.weight, rtol=1e-9)
    assert np.allclose(w.moment, 0.0, atol=1e-9)
    assert np.allclose(dbg.e_R, 0.0, atol=1e-12)


def test_controller_position_error_tilts():
    spec = TrajectorySpec()
    traj = lambda t: setpoint(spec, t)
    ctrl = GeometricController(PARAMS, GAINS, 0.002)
    p = spec.start_point() + np.array([-0.5, 0.0, 0.0])  # vehicle left of target
    w, dbg = ctrl.command(5.0, p, np.zeros(3), quat.IDENTITY.copy(), np.zeros(3), traj)
    assert dbg.b3_d[0] > 0.01          # lean toward +x
    assert w.moment[1] > 0.0           # pitch moment to tip the nose


def test_gains_validation():
    with pytest.raises(ValueError):
        Gains(kp=np.array([1.0, -2.0, 3.0]))
    with pytest.raises(ValueError):
        Gains(ft_kR=-1.0)


def test_integral_baseline_accumulates_and_clamps():
    ib = IntegralBaseline(gain_f=3.0, gain_m=0.3, clamp=0.1)
    for _ in range(1000):
        w = ib.step(np.array([0.0, 0.0, 1.0]), 0.01)
    assert np.isclose(ib.acc[2], 0.1)           # clamped
    assert np.isclose(w.f, 0.3)                 # gain_f * clamp
    assert np.allclose(w.moment, 0.0)
    ib.reset()
    assert np.allclose(ib.acc, 0.0)


def test_integral_baseline_moment_mapping():
    ib = IntegralBaseline(gain_f=3.0, gain_m=0.3, clamp=1.0)
    w = ib.step(np.array([1.0, 0.0, 0.0]), 0.1)   # want +x body accel
    assert w.moment[1] > 0.0                       # pitch forward
    w2 = IntegralBaseline(gain_m=0.3).step(np.array([0.0, 1.0, 0.0]), 0.1)
    assert w2.moment[0] < 0.0                      # roll toward +y
