"""Plant integration checks: fixed points, ballistic flight, disturbances."""

import numpy as np
import pytest

from quadfault.dynamics import (ExternalDisturbance, IntegrationError,
                                NoiseConfig, RigidBodyState, measure,
                                motor_response, step, true_wrench)
from quadfault.vehicle import DamageProfile, VehicleParams

PARAMS = VehicleParams()
CLEAN = DamageProfile.undamaged()
NO_DIST = ExternalDisturbance.zero()


def propagate(state, speeds, n, dt=0.001, damage=CLEAN, dist=NO_DIST):
    for _ in range(n):
        state = step(state, speeds, PARAMS, damage, dist, dt)
    return state


def test_hover_fixed_point():
    # exact hover speeds hold position to integration accuracy for a second
    s0 = RigidBodyState.hover([0.0, 0.0, 1.0])
    s = propagate(s0, np.full(4, PARAMS.hover_speed), 1000)
    assert np.linalg.norm(s.p - [0.0, 0.0, 1.0]) < 1e-9
    assert np.linalg.norm(s.v) < 1e-9
    assert np.linalg.norm(s.omega) < 1e-12
    assert np.allclose(s.q, [1, 0, 0, 0], atol=1e-12)


def test_ballistic_parabola():
    # all rotors off: exact free fall, attitude untouched
    s0 = RigidBodyState.hover([0.0, 0.0, 5.0])
    s0.v = np.array([1.0, -0.5, 2.0])
    T = 0.8
    s = propagate(s0, np.zeros(4), 800)
    g = PARAMS.gravity
    expect_p = np.array([0.0, 0.0, 5.0]) + np.array([1.0, -0.5, 2.0]) * T \
        + 0.5 * np.array([0.0, 0.0, -g]) * T * T
    assert np.allclose(s.p, expect_p, atol=1e-10)
    assert np.allclose(s.v, [1.0, -0.5, 2.0 - g * T], atol=1e-10)
    assert np.allclose(s.q, [1, 0, 0, 0], atol=1e-14)


def test_constant_force_disturbance_accelerates():
    dist = ExternalDisturbance(force_world=np.array([0.35, 0.0, 0.0]),
                               moment_body=np.zeros(3))
    s0 = RigidBodyState.hover([0.0, 0.0, 1.0])
    T = 0.5
    s = propagate(s0, np.full(4, PARAMS.hover_speed), 500, dist=dist)
    assert np.isclose(s.v[0], 0.35 / PARAMS.mass * T, rtol=1e-9)


def test_torque_free_spin_conserves_momentum():
    # zero moment, axisymmetric body: |J omega| in the world frame constant
    s0 = RigidBodyState.hover([0.0, 0.0, 1.0])
    s0.omega = np.array([2.0, -1.0, 8.0])
    n0 = np.linalg.norm(PARAMS.inertia @ s0.omega)
    s = propagate(s0, np.zeros(4), 500)
    n1 = np.linalg.norm(PARAMS.inertia @ s.omega)
    assert np.isclose(n0, n1, rtol=1e-10)


def test_spin_torque_yaw_acceleration():
    # rotors all spinning the same magnitude produce zero yaw torque;
    # kill one pair's counterparts and the reaction torque shows up in wz
    speeds = np.array([1200.0, 0.0, 1200.0, 0.0])
    wr = true_wrench(speeds, PARAMS, CLEAN)
    assert wr.moment[2] > 0  # both survivors spin positive
    s0 = RigidBodyState.hover([0.0, 0.0, 1.0])
    dt = 0.002
    s = propagate(s0, speeds, 2, dt)
    assert s.omega[2] > 0


def test_damaged_rotor_tips_the_vehicle():
    d = DamageProfile.from_kf_ratio([1.0, 1.0, 0.5, 1.0])
    s0 = RigidBodyState.hover([0.0, 0.0, 1.0])
    s = propagate(s0, np.full(4, PARAMS.hover_speed), 100, damage=d)
    # rotor 2 sits at -arm_x, +arm_y: thrust loss there rolls negative-ish
    # and pitches; either way the attitude must have left identity
    assert np.linalg.norm(s.omega[:2]) > 0.1
    assert s.v[2] < 0  # net thrust below weight


def test_true_wrench_matches_mixing():
    rng = np.random.default_rng(20)
    d = DamageProfile.from_kf_ratio(rng.uniform(0.3, 1.0, 4))
    speeds = rng.uniform(200.0, 2000.0, 4)
    wr = true_wrench(speeds, PARAMS, d)
    kf = PARAMS.kf_model * d.kf_ratio
    f_manual = float(np.sum(kf * speeds ** 2))
    assert np.isclose(wr.f, f_manual, rtol=1e-12)


def test_motor_response_first_order():
    # tau=0 is instantaneous; tau>0 follows 1 - exp(-dt/tau) per step
    w = motor_response(np.zeros(4), np.full(4, 100.0), 0.0, 0.001)
    assert np.allclose(w, 100.0)
    w = motor_response(np.zeros(4), np.full(4, 100.0), 0.05, 0.001)
    assert np.allclose(w, 100.0 * (1.0 - np.exp(-0.001 / 0.05)), rtol=1e-12)


def test_integration_error_on_nonfinite():
    s0 = RigidBodyState.hover([0.0, 0.0, 1.0])
    s0.v = np.array([np.nan, 0.0, 0.0])
    with pytest.raises(IntegrationError):
        step(s0, np.zeros(4), PARAMS, CLEAN, NO_DIST, 0.001)


def test_measure_noise_statistics():
    rng = np.random.default_rng(21)
    noise = NoiseConfig(vel_std=np.array([0.01, 0.01, 0.01]),
                        omega_std=np.array([0.02, 0.02, 0.02]))
    s = RigidBodyState.hover([0.0, 0.0, 1.0])
    draws = np.array([measure(s, rng, noise)[0] for _ in range(4000)])
    assert np.allclose(draws.mean(axis=0), 0.0, atol=1e-3)
    assert np.allclose(draws.std(axis=0), 0.01, rtol=0.1)


def test_measure_zero_noise_exact():
    rng = np.random.default_rng(22)
    s = RigidBodyState.hover([0.0, 0.0, 1.0])
    s.v = np.array([0.3, -0.1, 0.05])
    v_m, om_m = measure(s, rng, NoiseConfig.zero())
    assert np.array_equal(v_m, s.v)
    assert np.array_equal(om_m, s.omega)


def test_measure_draw_count_reproducible():
    # same seed, same draw sequence -> identical measurements
    noise = NoiseConfig(vel_std=np.full(3, 0.002), omega_std=np.full(3, 0.004))
    s = RigidBodyState.hover([0.0, 0.0, 1.0])
    a = [measure(s, np.random.default_rng(5), noise) for _ in range(1)][0]
    b = [measure(s, np.random.default_rng(5), noise) for _ in range(1)][0]
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
