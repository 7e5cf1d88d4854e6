"""Rigid body plant: quadrotor dynamics integrated with fixed-step RK4.

World frame is ENU with e3 up, so gravity enters the translational
equation as -g*e3 and thrust acts along the body z axis (+b3).  States:

    p      world position [m]
    v      world velocity [m/s]
    q      attitude quaternion, scalar first, body -> world
    omega  body angular velocity [rad/s]

The plant flies with the *true* per-rotor coefficients (model coefficient
times the damage retention ratio); controllers elsewhere only ever see the
model values.
"""

from dataclasses import dataclass, field

import numpy as np

from .vehicle import Wrench


class IntegrationError(RuntimeError):
    """Raised when the state goes non-finite during a step."""


@dataclass
class RigidBodyState:
    p: np.ndarray
    v: np.ndarray
    q: np.ndarray
    omega: np.ndarray

    @classmethod
    def hover(cls, position):
        return cls(
            p=np.asarray(position, dtype=float).copy(),
            v=np.zeros(3),
            q=np.array([1.0, 0.0, 0.0, 0.0]),
            omega=np.zeros(3),
        )

    def copy(self):
        return RigidBodyState(self.p.copy(), self.v.copy(), self.q.copy(), self.omega.copy())


@dataclass(frozen=True)
class ExternalDisturbance:
    """Constant wrench applied during a step: world force + body moment."""

    force_world: np.ndarray = field(default_factory=lambda: np.zeros(3))
    moment_body: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def zero(cls):
        return cls()


def true_mixing(params, damage):
    """Mixing matrix of the damaged plant (worth caching between faults)."""
    return params.mixing_matrix(
        kf=params.kf_model * damage.kf_ratio,
        km=params.km_model * damage.km_ratio,
    )


def true_wrench(speeds, params, damage, mix=None):
    """Wrench actually produced by the damaged plant at the given speeds.

    Thrust sums the per-rotor kf_ratio-scaled forces; moments use the same
    arm sign pattern as the model mixing matrix but with degraded
    coefficients; yaw sums the spin-signed degraded torques.
    """
    w2 = np.asarray(speeds, dtype=float) ** 2
    out = (true_mixing(params, damage) if mix is None else mix) @ w2
    return Wrench(f=float(out[0]), moment=out[1:4])


def _deriv(p, v, q, omega, f, moment, dist, params):
    # translational: thrust along body z plus gravity and external force
    w, x, y, z = q
    bz = np.array([2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)])
    vdot = (f * bz + dist.force_world) / params.mass
    vdot[2] -= params.gravity
    # attitude kinematics
    ox, oy, oz = omega
    qdot = 0.5 * np.array([
        -x * ox - y * oy - z * oz,
        w * ox + y * oz - z * oy,
        w * oy - x * oz + z * ox,
        w * oz + x * oy - y * ox,
    ])
    # rotational: Euler equation with gyroscopic term (cross product unrolled,
    # np.cross is slow for single 3-vectors)
    Jw = params.inertia @ omega
    gx = oy * Jw[2] - oz * Jw[1]
    gy = oz * Jw[0] - ox * Jw[2]
    gz = ox * Jw[1] - oy * Jw[0]
    m = moment + dist.moment_body
    wdot = params.inertia_inv @ np.array([m[0] - gx, m[1] - gy, m[2] - gz])
    return v, vdot, qdot, wdot


def step(state, speeds, params, damage, disturbance, dt, mix=None):
    """One RK4 step of duration dt with rotor speeds held constant.

    The quaternion is renormalized after the update (drift stays at
    rounding level for the step sizes used here).
    """
    wr = true_wrench(speeds, params, damage, mix=mix)
    f, moment = wr.f, wr.moment

    p0, v0, q0, w0 = state.p, state.v, state.q, state.omega
    k1 = _deriv(p0, v0, q0, w0, f, moment, disturbance, params)
    k2 = _deriv(p0 + 0.5 * dt * k1[0], v0 + 0.5 * dt * k1[1],
                q0 + 0.5 * dt * k1[2], w0 + 0.5 * dt * k1[3], f, moment, disturbance, params)
    k3 = _deriv(p0 + 0.5 * dt * k2[0], v0 + 0.5 * dt * k2[1],
                q0 + 0.5 * dt * k2[2], w0 + 0.5 * dt * k2[3], f, moment, disturbance, params)
    k4 = _deriv(p0 + dt * k3[0], v0 + dt * k3[1],
                q0 + dt * k3[2], w0 + dt * k3[3], f, moment, disturbance, params)

    c = dt / 6.0
    p = p0 + c * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    v = v0 + c * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    q = q0 + c * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    w = w0 + c * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])

    q = q / np.sqrt(q @ q)
    if not (np.isfinite(p).all() and np.isfinite(v).all()
            and np.isfinite(q).all() and np.isfinite(w).all()):
        raise IntegrationError("non-finite state after integration step")
    return RigidBodyState(p, v, q, w)


@dataclass(frozen=True)
class NoiseConfig:
    """Per-axis standard deviations of the velocity measurements.

    Stands in for the estimation pipeline of a motion-capture plus IMU
    setup; position and attitude are taken as exact.
    """

    vel_std: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_std: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def zero(cls):
        return cls()


def measure(state, rng, noise):
    """Velocity measurements with additive Gaussian noise.

    Returns (v_m world frame, omega_m body frame).  Draws exactly six
    normals from rng per call so runs are reproducible for a given seed.
    """
    n = rng.standard_normal(6)
    v_m = state.v + np.asarray(noise.vel_std) * n[:3]
    omega_m = state.omega + np.asarray(noise.omega_std) * n[3:]
    return v_m, omega_m


def motor_response(current, commanded, tau, dt):
    """First-order lag toward the commanded speeds (exact discretization)."""
    if tau <= 0.0:
        return np.asarray(commanded, dtype=float).copy()
    a = 1.0 - np.exp(-dt / tau)
    return current + a * (commanded - current)
