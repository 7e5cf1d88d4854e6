"""Adaptation-law checks: discrete gain, DC recovery, filter behavior."""

import math

import numpy as np
import pytest

from quadfault.l1 import (L1Controller, L1Params, adaptation_gain,
                          blend_compensation, compute_sigma,
                          predictor_derivatives)
from quadfault.vehicle import VehicleParams, Wrench

PARAMS = VehicleParams()


def test_adaptation_gain_oracle():
    # a e^{a dt} / (e^{a dt} - 1) recomputed with math.exp, frozen value
    a, dt = 200.0, 0.002
    e = math.exp(a * dt)
    assert np.isclose(adaptation_gain(np.array([a]), dt)[0], a * e / (e - 1.0),
                      rtol=0, atol=1e-12)
    assert np.isclose(adaptation_gain(np.array([a]), dt)[0],
                      606.6489563439472, rtol=0, atol=1e-10)


def test_adaptation_gain_limits():
    # small a*dt: gain approaches 1/dt + a/2 (midpoint of the pole)
    a, dt = 1.0, 0.002
    g = adaptation_gain(np.array([a]), dt)[0]
    assert np.isclose(g, 1.0 / dt + a / 2.0, rtol=1e-4)


def test_blend_compensation_values():
    lam = np.array([0.4, 0.1])
    dc = blend_compensation(lam)
    assert np.isclose(dc[0], 2.0 - math.exp(-0.4), rtol=0, atol=1e-15)
    assert np.isclose(dc[1], 1.0951625819640404, rtol=0, atol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        L1Params(lam=np.array([0.0, 0.4, 0.4, 0.1, 0.1, 0.1]))
    with pytest.raises(ValueError):
        L1Params(lpf_alpha=np.zeros(6))


def test_sigma_frame_mapping():
    # pure z velocity error at identity attitude -> body z force channel
    l1 = L1Params()
    a = adaptation_gain(l1.k_diag, l1.dt)
    sig = compute_sigma(np.array([0.0, 0.0, 0.1]), np.zeros(3), np.eye(3),
                        a, PARAMS)
    assert sig[2] > 0 and np.allclose(sig[[0, 1, 3, 4, 5]], 0.0)
    assert np.isclose(sig[2], PARAMS.mass * a[2] * 0.1, rtol=1e-12)


def test_predictor_hover_equilibrium():
    # exact hover wrench, zero sigma: no predicted acceleration
    vdot, wdot = predictor_derivatives(np.zeros(3), np.eye(3), PARAMS.weight,
                                       np.zeros(3), np.zeros(6), PARAMS)
    assert np.allclose(vdot, 0.0, atol=1e-12)
    assert np.allclose(wdot, 0.0, atol=1e-12)


def synthetic_loop(d_force_z=0.0, d_moment_x=0.0, n=1500):
    """Predictor-only closed loop against a scripted constant-disturbance
    plant in hover; returns the controller after n cycles."""
    l1 = L1Controller(L1Params(), PARAMS)
    R = np.eye(3)
    v = np.zeros(3)
    omega = np.zeros(3)
    dt = l1.p.dt
    for _ in range(n):
        act = l1.estimate(v, omega, R)
        f_cmd = PARAMS.weight + act.f
        m_cmd = act.moment.copy()
        l1.propagate(v, omega, R, f_cmd, m_cmd)
        # plant truth: commanded wrench plus the hidden disturbance
        vdot = np.array([0.0, 0.0, (f_cmd + d_force_z) / PARAMS.mass - PARAMS.gravity])
        wdot = PARAMS.inertia_inv @ (m_cmd + np.array([d_moment_x, 0.0, 0.0]))
        v = v + dt * vdot
        omega = omega + dt * wdot
    return l1, v, omega


def test_constant_force_recovered_exactly():
    # -0.5 N hidden thrust deficit: filtered sigma_z settles at -0.5 N and
    # the action cancels it (DC compensation makes the recovery exact).
    # There is no velocity loop in this scripted plant, so the transient
    # drift persists; what must vanish is any further drift.
    l1_mid, v_mid, _ = synthetic_loop(d_force_z=-0.5, n=1200)
    l1, v, _ = synthetic_loop(d_force_z=-0.5, n=1500)
    assert np.isclose(l1.sigma_filtered[2], -0.5, rtol=2e-3)
    assert np.isclose(l1.action.f, 0.5, rtol=2e-3)
    assert abs(v[2] - v_mid[2]) < 1e-6


def test_constant_moment_recovered_exactly():
    _, _, om_mid = synthetic_loop(d_moment_x=0.01, n=1200)
    l1, _, omega = synthetic_loop(d_moment_x=0.01, n=1500)
    assert np.isclose(l1.sigma_filtered[3], 0.01, rtol=2e-3)
    assert np.isclose(l1.action.moment[0], -0.01, rtol=2e-3)
    assert abs(omega[0] - om_mid[0]) < 1e-6


def test_lateral_channels_never_filtered():
    l1 = L1Controller(L1Params(), PARAMS)
    rng = np.random.default_rng(40)
    for _ in range(50):
        l1.estimate(rng.standard_normal(3) * 0.1, rng.standard_normal(3) * 0.1,
                    np.eye(3))
        l1.propagate(np.zeros(3), np.zeros(3), np.eye(3), PARAMS.weight, np.zeros(3))
    assert l1.lpf[0] == 0.0 and l1.lpf[1] == 0.0
    assert np.any(l1.lpf[2:] != 0.0)


def test_freeze_stops_adaptation():
    l1 = L1Controller(L1Params(), PARAMS)
    l1.estimate(np.array([0.0, 0.0, 0.3]), np.zeros(3), np.eye(3))
    before = l1.sigma_filtered.copy()
    l1.freeze()
    l1.estimate(np.array([0.0, 0.0, -5.0]), np.zeros(3), np.eye(3))
    l1.propagate(np.zeros(3), np.zeros(3), np.eye(3), 0.0, np.zeros(3))
    assert np.array_equal(l1.sigma_filtered, before)


def test_reset_clears_state():
    l1 = L1Controller(L1Params(), PARAMS)
    l1.estimate(np.ones(3), np.ones(3), np.eye(3))
    l1.reset(v0=np.array([1.0, 0.0, 0.0]))
    assert np.allclose(l1.sigma, 0.0) and np.allclose(l1.lpf, 0.0)
    assert np.allclose(l1.v_p, [1.0, 0.0, 0.0])


def test_step_equals_estimate_then_propagate():
    a = L1Controller(L1Params(), PARAMS)
    b = L1Controller(L1Params(), PARAMS)
    rng = np.random.default_rng(41)
    for _ in range(20):
        v = rng.standard_normal(3) * 0.05
        om = rng.standard_normal(3) * 0.05
        w = Wrench(f=PARAMS.weight, moment=np.zeros(3))
        act_a = a.step(v, om, np.eye(3), w)
        act_b = b.estimate(v, om, np.eye(3))
        b.propagate(v, om, np.eye(3), w.f + act_b.f, w.moment + act_b.moment)
        assert np.isclose(act_a.f, act_b.f) and np.allclose(act_a.moment, act_b.moment)
        assert np.allclose(a.v_p, b.v_p) and np.allclose(a.omega_p, b.omega_p)
