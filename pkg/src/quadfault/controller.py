"""Geometric tracking controller on SE(3) and the motor mixer.

Outer loop turns position/velocity error plus feedforward into a commanded
acceleration; its direction defines the desired thrust axis and, combined
with the reference yaw, the desired attitude quaternion.  Inner loop is a
rotation-matrix attitude error PD with gyroscopic feedforward.  The
desired body rate comes from finite differencing the desired quaternion
across one control step (trajectory terms advanced, vehicle state frozen).
"""

from dataclasses import dataclass, field

import numpy as np

from . import quat
from .vehicle import Wrench

E3 = np.array([0.0, 0.0, 1.0])


class DegenerateThrustError(ValueError):
    """Commanded acceleration has no usable direction."""


class AttitudeSingularityError(ValueError):
    """Desired thrust axis points straight down; tilt quaternion undefined."""


@dataclass(frozen=True)
class Gains:
    kp: np.ndarray = field(default_factory=lambda: np.array([6.0, 6.0, 8.0]))
    kv: np.ndarray = field(default_factory=lambda: np.array([4.0, 4.0, 5.0]))
    kR: np.ndarray = field(default_factory=lambda: np.array([2.0, 2.0, 0.4]))
    komega: np.ndarray = field(default_factory=lambda: np.array([0.3, 0.3, 0.1]))
    # Tilt loop for three-rotor flight.  The continuous spin couples roll and
    # pitch into a nutation mode near (Jz/Jxy)*spin rad/s; the loop must run
    # faster than that mode or it pumps it, so these are much stiffer than kR.
    ft_kR: float = 8.0
    ft_komega: float = 0.25

    def __post_init__(self):
        for name in ("kp", "kv", "kR", "komega"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or np.any(v < 0):
                raise ValueError(f"{name} must be a non-negative 3-vector")
            object.__setattr__(self, name, v)
        if self.ft_kR < 0 or self.ft_komega < 0:
            raise ValueError("ft gains must be non-negative")


def accel_command(p, v, sp, gains, gravity):
    """Commanded specific force in the world frame [m/s^2], gravity included.

    At the setpoint in steady hover this is exactly g*e3.
    """
    return (gains.kp * (sp.p_d - p) + gains.kv * (sp.v_d - v)
            + sp.a_d + np.array([0.0, 0.0, gravity]))


def compute_b3(accel_cmd, eps=1e-6):
    """Unit desired thrust axis; raises DegenerateThrustError near zero."""
    n = np.linalg.norm(accel_cmd)
    if n < eps:
        raise DegenerateThrustError("commanded acceleration near zero")
    return accel_cmd / n


def thrust_command(accel_cmd, q, params):
    """Collective thrust: commanded force projected on the current body z.

    Clamped to [0, max_thrust].
    """
    f = params.mass * float(accel_cmd @ quat.body_z(q))
    return min(max(f, 0.0), params.max_thrust)


def desired_attitude(b3, psi):
    """Tilt quaternion to b3 composed with a yaw rotation about body z."""
    try:
        qt = quat.tilt_from_axis(b3)
    except ValueError as e:
        raise AttitudeSingularityError(str(e)) from e
    return quat.multiply(qt, quat.from_yaw(psi))


def desired_omega(q_d, q_d_dot):
    """Body rate of the desired frame: vector part of 2 * q_d^-1 * q_d_dot."""
    return 2.0 * quat.multiply(quat.conjugate(q_d), q_d_dot)[1:]


def attitude_error(R, R_d):
    """so(3) attitude error 0.5 * vee(R_d^T R - R^T R_d)."""
    E = R_d.T @ R - R.T @ R_d
    return 0.5 * np.array([E[2, 1], E[0, 2], E[1, 0]])


def rate_error(omega, R, R_d, omega_d):
    """Body rate error against the desired rate mapped into the body frame."""
    return omega - R.T @ (R_d @ omega_d)


def gyroscopic_torque(omega, params):
    """omega x J omega, unrolled (np.cross is slow for single vectors)."""
    Jw = params.inertia @ omega
    return np.array([
        omega[1] * Jw[2] - omega[2] * Jw[1],
        omega[2] * Jw[0] - omega[0] * Jw[2],
        omega[0] * Jw[1] - omega[1] * Jw[0],
    ])


def moment_command(e_R, e_omega, omega, params, gains):
    """Attitude PD with gyroscopic feedforward [N m]."""
    return -gains.kR * e_R - gains.komega * e_omega + gyroscopic_torque(omega, params)


def allocate(wrench, params, mix_inv=None):
    """Motor speeds realizing the wrench under the healthy rotor model.

    Solves the 4x4 mixing system, clips negative omega^2 to zero and caps
    speeds at omega_max.  Returns (speeds, clipped) where clipped flags
    rotors that hit either limit.
    """
    if mix_inv is None:
        mix_inv = np.linalg.inv(params.mixing_matrix())
    target = np.array([wrench.f, wrench.moment[0], wrench.moment[1], wrench.moment[2]])
    w2 = mix_inv @ target
    clipped = w2 < 0.0
    speeds = np.sqrt(np.maximum(w2, 0.0))
    over = speeds > params.omega_max
    clipped |= over
    speeds[over] = params.omega_max
    return speeds, clipped


def allocation_request(wrench, params, mix_inv=None):
    """Uncapped rotor speeds solving the mixing system for the wrench.

    Negative omega^2 components floor at zero, but speeds above omega_max
    are returned as requested.  This is the command magnitude the wrench
    implies before any actuator limit; what a flight computer derives from
    the control law even when the motor cannot honor it.
    """
    if mix_inv is None:
        mix_inv = np.linalg.inv(params.mixing_matrix())
    target = np.array([wrench.f, wrench.moment[0], wrench.moment[1], wrench.moment[2]])
    w2 = mix_inv @ target
    return np.sqrt(np.maximum(w2, 0.0))


@dataclass
class ControlDebug:
    """Intermediate quantities of one control cycle, for logging and tests."""

    accel_cmd: np.ndarray
    b3_d: np.ndarray
    q_d: np.ndarray
    omega_d: np.ndarray
    e_R: np.ndarray
    e_omega: np.ndarray


class GeometricController:
    """Stateful wrapper running the full cascade once per control cycle.

    Holds the previous desired thrust axis as a fallback for degenerate
    commands and owns the finite-difference step size (one control period).
    """

    def __init__(self, params, gains, control_dt):
        self.params = params
        self.gains = gains
        self.dt = control_dt
        self._prev_b3 = E3.copy()
        self._mix_inv = np.linalg.inv(params.mixing_matrix())

    def _b3_for(self, p, v, sp):
        a_cmd = accel_command(p, v, sp, self.gains, self.params.gravity)
        try:
            return compute_b3(a_cmd), a_cmd
        except DegenerateThrustError:
            return self._prev_b3, a_cmd

    def command(self, t, p, v, q, omega_m, traj, sp0=None, R=None):
        """Nominal wrench for the cycle at time t.

        traj is a callable t -> TrajectorySetpoint.  Uses the true pose
        (p, q) and measured velocities (v, omega_m).  sp0 and R may be
        passed in when the caller already evaluated them.
        """
        h = self.dt
        if sp0 is None:
            sp0 = traj(t)
        b3_d, a_cmd = self._b3_for(p, v, sp0)
        self._prev_b3 = b3_d
        f = thrust_command(a_cmd, q, self.params)
        q_d = desired_attitude(b3_d, sp0.psi)

        # central difference of q_d: trajectory terms move, state stays frozen
        tm = max(t - h, 0.0)
        qs = []
        for tt in (tm, t + h):
            sp = traj(tt)
            b3_t, _ = self._b3_for(p, v, sp)
            qi = desired_attitude(b3_t, sp.psi)
            if qi @ q_d < 0.0:
                qi = -qi
            qs.append(qi)
        q_d_dot = (qs[1] - qs[0]) / (t + h - tm)
        omega_d = desired_omega(q_d, q_d_dot)

        if R is None:
            R = quat.to_matrix(q)
        R_d = quat.to_matrix(q_d)
        e_R = attitude_error(R, R_d)
        e_om = rate_error(omega_m, R, R_d, omega_d)
        M = moment_command(e_R, e_om, omega_m, self.params, self.gains)
        dbg = ControlDebug(accel_cmd=a_cmd, b3_d=b3_d, q_d=q_d,
                           omega_d=omega_d, e_R=e_R, e_omega=e_om)
        return Wrench(f=f, moment=M), dbg

    def allocate(self, wrench):
        return allocate(wrench, self.params, self._mix_inv)

    def allocation_request(self, wrench):
        return allocation_request(wrench, self.params, self._mix_inv)


class IntegralBaseline:
    """Velocity-error integral compensator used in place of the adaptive loop.

    Accumulates the body-frame velocity error and maps it to a supplemental
    wrench: z component to thrust, x/y components to the tilt moments that
    would accelerate the vehicle along those body axes.  Each accumulator
    axis is clamped to +-clamp to avoid windup.
    """

    def __init__(self, gain_f=3.0, gain_m=0.3, clamp=1.0):
        self.gain_f = gain_f
        self.gain_m = gain_m
        self.clamp = clamp
        self.acc = np.zeros(3)

    def reset(self):
        self.acc[:] = 0.0

    def step(self, v_err_body, dt):
        self.acc = np.clip(self.acc + v_err_body * dt, -self.clamp, self.clamp)
        f = self.gain_f * self.acc[2]
        moment = np.array([-self.gain_m * self.acc[1], self.gain_m * self.acc[0], 0.0])
        return Wrench(f=f, moment=moment)
