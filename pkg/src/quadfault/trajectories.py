"""Reference trajectories with analytic derivatives.

All shapes are single-frequency sinusoids around a center point.  Every
trajectory starts exactly at its t=0 point with zero velocity and blends
into the moving reference through a quintic smooth-start envelope over
ramp_time, so a vehicle initialized in hover can follow without a step.

Supported kinds:
    hover         hold the center point
    ellipse       x = rx cos, y = ry sin, z = rz sin (starts at +rx offset)
    circle        planar circle of radius rx (radii[1] ignored, z constant)
    figure_eight  1:2 Lissajous, x = rx sin(th), y = ry sin(2 th)
"""

import enum
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class TrajectoryKind(enum.Enum):
    HOVER = "hover"
    ELLIPSE = "ellipse"
    CIRCLE = "circle"
    FIGURE_EIGHT = "figure_eight"


class YawMode(enum.Enum):
    FIXED = "fixed"
    TANGENT = "tangent"


@dataclass(frozen=True)
class TrajectorySpec:
    kind: TrajectoryKind = TrajectoryKind.HOVER
    center: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    radii: np.ndarray = field(default_factory=lambda: np.zeros(3))
    period: float = 0.0          # s, one revolution of the base sinusoid
    yaw_mode: YawMode = YawMode.FIXED
    psi0: float = 0.0            # rad, fixed yaw / fallback yaw
    ramp_time: float = 0.0       # s, 0 picks a default (period, or 2 s hover)

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=float))
        if self.kind is not TrajectoryKind.HOVER and self.period <= 0.0:
            raise ValueError("periodic trajectory needs period > 0")
        if np.any(self.radii < 0.0):
            raise ValueError("radii must be non-negative")

    @property
    def ramp(self):
        if self.ramp_time > 0.0:
            return self.ramp_time
        return self.period if self.kind is not TrajectoryKind.HOVER else 2.0

    def start_point(self):
        """Where the vehicle should sit at t = 0."""
        b, _, _, _ = _base_curve(self, 0.0)
        return self.center + b


@dataclass
class TrajectorySetpoint:
    p_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray
    psi: float
    psi_dot: float
    b3_dot_d: np.ndarray         # rate of the feedforward thrust axis


def _base_curve(spec, t):
    """Offset from center and its first three time derivatives (no envelope)."""
    r = spec.radii
    if spec.kind is TrajectoryKind.HOVER:
        z = np.zeros(3)
        return z, z.copy(), z.copy(), z.copy()
    w = TWO_PI / spec.period
    th = w * t
    c, s = np.cos(th), np.sin(th)
    if spec.kind is TrajectoryKind.ELLIPSE:
        b = np.array([r[0] * c, r[1] * s, r[2] * s])
        db = np.array([-r[0] * s, r[1] * c, r[2] * c]) * w
        d2b = -b * w * w
        d3b = -db * w * w
    elif spec.kind is TrajectoryKind.CIRCLE:
        b = np.array([r[0] * c, r[0] * s, 0.0])
        db = np.array([-r[0] * s, r[0] * c, 0.0]) * w
        d2b = -b * w * w
        d3b = -db * w * w
    elif spec.kind is TrajectoryKind.FIGURE_EIGHT:
        c2, s2 = np.cos(2 * th), np.sin(2 * th)
        b = np.array([r[0] * s, r[1] * s2, 0.0])
        db = np.array([r[0] * c, 2 * r[1] * c2, 0.0]) * w
        d2b = np.array([-r[0] * s, -4 * r[1] * s2, 0.0]) * w * w
        d3b = np.array([-r[0] * c, -8 * r[1] * c2, 0.0]) * w ** 3
    else:
        raise ValueError(f"unknown trajectory kind {spec.kind}")
    return b, db, d2b, d3b


def _envelope(t, T):
    """Quintic smoothstep s(t) and derivatives; C2 at both ends."""
    if t >= T:
        return 1.0, 0.0, 0.0, 0.0
    u = t / T
    s = u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)
    ds = 30.0 * u * u * (1.0 - u) ** 2 / T
    d2s = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / T ** 2
    d3s = 60.0 * (1.0 - 6.0 * u + 6.0 * u * u) / T ** 3
    return s, ds, d2s, d3s


def setpoint(spec, t, gravity=9.81):
    """Reference state at time t >= 0."""
    t = max(t, 0.0)
    b, db, d2b, d3b = _base_curve(spec, t)
    p0 = spec.start_point()
    # delta from the start point to the un-enveloped reference
    delta = spec.center + b - p0
    s, ds, d2s, d3s = _envelope(t, spec.ramp)
    p = p0 + s * delta
    v = ds * delta + s * db
    a = d2s * delta + 2.0 * ds * db + s * d2b
    j = d3s * delta + 3.0 * d2s * db + 3.0 * ds * d2b + s * d3b

    psi, psi_dot = _yaw(spec, v, a)
    b3_dot = _thrust_axis_rate(a, j, gravity)
    return TrajectorySetpoint(p_d=p, v_d=v, a_d=a, psi=psi, psi_dot=psi_dot, b3_dot_d=b3_dot)


def _yaw(spec, v, a):
    if spec.yaw_mode is YawMode.FIXED:
        return _wrap(spec.psi0), 0.0
    speed2 = v[0] ** 2 + v[1] ** 2
    if speed2 < 1e-6:
        return _wrap(spec.psi0), 0.0
    psi = np.arctan2(v[1], v[0])
    psi_dot = (v[0] * a[1] - v[1] * a[0]) / speed2
    return _wrap(psi), psi_dot


def _thrust_axis_rate(a, jerk, gravity):
    # feedforward specific force and its rate; unit-vector derivative rule
    w = a + np.array([0.0, 0.0, gravity])
    n = np.linalg.norm(w)
    if n < 1e-9:
        return np.zeros(3)
    u = w / n
    return (jerk - u * (u @ jerk)) / n


def _wrap(psi):
    return float((psi + np.pi) % TWO_PI - np.pi)


def max_speed(spec, n=4000):
    """Peak reference speed after the ramp, sampled over one period."""
    if spec.kind is TrajectoryKind.HOVER:
        return 0.0
    ts = np.linspace(0.0, spec.period, n, endpoint=False)
    best = 0.0
    for t in ts:
        _, db, _, _ = _base_curve(spec, t)
        best = max(best, float(np.linalg.norm(db)))
    return best


def figure_eight_period_for_peak(rx, ry, peak_speed):
    """Period giving the requested peak speed for a 1:2 Lissajous eight.

    Peak of |v| is w * sqrt(rx^2 + 4 ry^2), attained where both cosines
    hit 1 simultaneously.
    """
    w = peak_speed / np.sqrt(rx ** 2 + 4.0 * ry ** 2)
    return TWO_PI / w
