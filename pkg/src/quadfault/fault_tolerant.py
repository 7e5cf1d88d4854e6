"""Supervisor and reduced-attitude control for flight with a dead rotor.

The supervisor watches the filtered damage estimates and, once the worst
rotor stays past the threshold for a debounce window, irreversibly hands
control to the fault-tolerant path: the flagged rotor is commanded to
zero, thrust and the two tilt moments are allocated to the remaining
three rotors, and yaw is given up.  The vehicle spins about body z; a
weak damping moment engages above a spin ceiling so the rate stays
bounded (physically this is the role of rotational drag, which the plant
model omits).
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .controller import gyroscopic_torque
from .vehicle import PITCH_SIGNS, ROLL_SIGNS


class Mode(enum.Enum):
    ADAPTIVE = "adaptive"
    FAULT_TOLERANT = "fault_tolerant"


@dataclass
class SupervisorState:
    threshold: float = 0.5
    debounce_n: int = 25
    enabled: bool = True
    mode: Mode = Mode.ADAPTIVE
    disabled_rotor: int = -1
    count: int = 0

    @property
    def fault_tolerant(self):
        return self.mode is Mode.FAULT_TOLERANT


def supervise(k_mis_filtered, sup):
    """Advance the supervisor one cycle on the filtered mismatch vector.

    Returns the updated state.  The ADAPTIVE -> FAULT_TOLERANT edge fires
    after debounce_n consecutive cycles with max mismatch at or above the
    threshold; the transition is one-way and picks the argmax rotor
    (lowest index on ties).
    """
    if sup.fault_tolerant or not sup.enabled:
        return sup
    worst = float(np.max(k_mis_filtered))
    if worst >= sup.threshold:
        sup.count += 1
    else:
        sup.count = 0
    if sup.count >= sup.debounce_n:
        sup.mode = Mode.FAULT_TOLERANT
        sup.disabled_rotor = int(np.argmax(k_mis_filtered))
    return sup


def reduced_attitude_error(b3_d, b3):
    """Thrust-axis alignment error b3_d x b3 (same frame as the inputs)."""
    return np.cross(b3_d, b3)


def ft_moment_command(e_red, e_omega_xy, omega, params, gains,
                      spin_ceiling=20.0, spin_damping=0.05, tilt_budget=0.4):
    """Tilt moments from the reduced-attitude PD; yaw is free.

    Uses the dedicated ft gains: the spin makes roll/pitch nutate near
    (Jz/Jxy)*spin rad/s, and a loop slower than that mode goes unstable
    (the nominal kR of 2 resonates right around a 14 rad/s spin).

    The tilt demand is clamped to tilt_budget [N m] in norm.  Three rotors
    have a lopsided moment envelope (the rotor opposite the dead one
    carries no thrust at trim, so half the directions are weak), and an
    unclamped PD burst right after a handoff drives the allocator so deep
    into its limits that the realized thrust is wrong too.

    The z component is only the spin cap: zero below spin_ceiling, then a
    weak linear damping moment pulling the spin rate back toward it.
    """
    m = (-gains.ft_kR * e_red - gains.ft_komega * e_omega_xy
         + gyroscopic_torque(omega, params))
    tilt = np.hypot(m[0], m[1])
    if tilt > tilt_budget:
        m[0] *= tilt_budget / tilt
        m[1] *= tilt_budget / tilt
    wz = omega[2]
    if abs(wz) > spin_ceiling:
        m[2] = -spin_damping * (wz - np.sign(wz) * spin_ceiling)
    else:
        m[2] = 0.0
    return m


def ft_allocate(f, mx, my, disabled_rotor, params, omega_max=None):
    """Speeds for the three healthy rotors realizing (f, Mx, My).

    The disabled rotor is commanded to zero and dropped from the mixing
    system; the remaining 3x3 block is always invertible for this rotor
    geometry.  Negative omega^2 solutions clip to zero and speeds cap at
    omega_max, mirroring the main allocator.
    """
    if omega_max is None:
        omega_max = params.omega_max
    healthy = [i for i in range(4) if i != disabled_rotor]
    kf = params.kf_model
    B = np.array([
        np.full(4, kf),
        params.arm_x * ROLL_SIGNS * kf,
        params.arm_y * PITCH_SIGNS * kf,
    ])[:, healthy]
    w2 = np.linalg.solve(B, np.array([f, mx, my]))
    clipped4 = np.zeros(4, dtype=bool)
    speeds = np.zeros(4)
    for idx, rotor in enumerate(healthy):
        val = w2[idx]
        if val < 0.0:
            clipped4[rotor] = True
            val = 0.0
        s = np.sqrt(val)
        if s > omega_max:
            clipped4[rotor] = True
            s = omega_max
        speeds[rotor] = s
    return speeds, clipped4
