"""Vehicle parameters, rotor geometry, and propeller damage bookkeeping.

Rotor layout (x-config, index 0..3).  arm_x is the moment arm each rotor
contributes about the body x axis, arm_y the arm about body y.  The sign
rows below define which side of each axis a rotor sits on:

    roll  (Mx):  rotors 0,1 at +arm_x   rotors 2,3 at -arm_x
    pitch (My):  rotors 1,2 at +arm_y   rotors 0,3 at -arm_y
    yaw   (Mz):  reaction torque signs spin_dirs = (+1, -1, +1, -1)

A rotor's thrust is kf * omega^2 [N] and its reaction torque km * omega^2
[N m], omega in rad/s.  Damage to a blade tip scales thrust by the 4th
power of the effective radius and torque by the 5th power, hence the 5/4
exponent coupling the two ratios.
"""

from dataclasses import dataclass, field

import numpy as np

# per-rotor sign of the moment arm about body x and y, and of the yaw reaction
ROLL_SIGNS = np.array([1.0, 1.0, -1.0, -1.0])
PITCH_SIGNS = np.array([-1.0, 1.0, 1.0, -1.0])
SPIN_DIRS = np.array([1.0, -1.0, 1.0, -1.0])


def derive_km_ratio(kf_ratio):
    """Torque retention ratio implied by a thrust retention ratio.

    Radius loss r/r0 = kf_ratio^(1/4) (thrust goes with r^4), and torque
    goes with r^5, so km_ratio = kf_ratio^(5/4).
    """
    if kf_ratio < 0.0:
        raise ValueError("kf_ratio must be non-negative")
    return float(kf_ratio) ** 1.25


@dataclass
class Wrench:
    """Collective thrust f [N] along body z plus body moment [N m]."""

    f: float
    moment: np.ndarray

    def __add__(self, other):
        return Wrench(self.f + other.f, self.moment + other.moment)


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the airframe and its model propellers.

    kf_model / km_model are the undamaged coefficients the controller and
    allocator believe in; the plant may fly with degraded per-rotor values
    (see DamageProfile).
    """

    mass: float = 0.7               # kg
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.0035, 0.0035, 0.006]))
    gravity: float = 9.81           # m/s^2
    arm_x: float = 0.10             # m, moment arm about body x
    arm_y: float = 0.10             # m, moment arm about body y
    kf_model: float = 1.0e-6        # N / (rad/s)^2
    km_model: float = 1.6e-8        # N m / (rad/s)^2
    omega_max: float = 2500.0       # rad/s, per-rotor speed ceiling
    motor_tau: float = 0.0          # s, first-order motor lag (0 = instantaneous)
    spin_dirs: np.ndarray = field(default_factory=lambda: SPIN_DIRS.copy())

    def __post_init__(self):
        if self.mass <= 0 or self.kf_model <= 0 or self.km_model <= 0:
            raise ValueError("mass and rotor coefficients must be positive")
        J = np.asarray(self.inertia, dtype=float)
        if J.shape != (3, 3) or not np.allclose(J, J.T) or np.any(np.linalg.eigvalsh(J) <= 0):
            raise ValueError("inertia must be symmetric positive definite 3x3")
        object.__setattr__(self, "inertia", J)
        object.__setattr__(self, "_inertia_inv", np.linalg.inv(J))
        object.__setattr__(self, "spin_dirs", np.asarray(self.spin_dirs, dtype=float))
        if self.max_thrust < 2.5 * self.mass * self.gravity:
            raise ValueError("omega_max gives thrust-to-weight below 2.5")

    @property
    def weight(self):
        return self.mass * self.gravity

    @property
    def max_thrust(self):
        """Total thrust with all rotors at omega_max [N]."""
        return 4.0 * self.kf_model * self.omega_max ** 2

    @property
    def hover_speed(self):
        """Per-rotor speed that exactly supports the weight [rad/s]."""
        return float(np.sqrt(self.weight / (4.0 * self.kf_model)))

    @property
    def inertia_inv(self):
        return self._inertia_inv

    def mixing_matrix(self, kf=None, km=None):
        """4x4 map from per-rotor omega^2 to (f, Mx, My, Mz).

        kf / km may be per-rotor arrays to build the matrix of a damaged
        plant; defaults are the healthy model coefficients.
        """
        kf = np.full(4, self.kf_model) if kf is None else np.asarray(kf, dtype=float)
        km = np.full(4, self.km_model) if km is None else np.asarray(km, dtype=float)
        return np.array([
            kf,
            self.arm_x * ROLL_SIGNS * kf,
            self.arm_y * PITCH_SIGNS * kf,
            self.spin_dirs * km,
        ])


@dataclass
class DamageProfile:
    """Per-rotor thrust and torque retention ratios (1.0 = healthy)."""

    kf_ratio: np.ndarray = field(default_factory=lambda: np.ones(4))
    km_ratio: np.ndarray = field(default_factory=lambda: np.ones(4))

    def __post_init__(self):
        self.kf_ratio = np.asarray(self.kf_ratio, dtype=float)
        self.km_ratio = np.asarray(self.km_ratio, dtype=float)
        if np.any(self.kf_ratio < 0) or np.any(self.kf_ratio > 1) or \
           np.any(self.km_ratio < 0) or np.any(self.km_ratio > 1):
            raise ValueError("retention ratios must lie in [0, 1]")

    @classmethod
    def from_kf_ratio(cls, kf_ratio):
        """Build a profile from thrust ratios, deriving torque via the r^5/r^4 law."""
        kf = np.asarray(kf_ratio, dtype=float)
        km = np.array([derive_km_ratio(r) for r in kf])
        return cls(kf_ratio=kf, km_ratio=km)

    @classmethod
    def undamaged(cls):
        return cls()

    def set_rotor(self, rotor, kf_ratio):
        """Degrade one rotor in place, torque ratio derived from thrust ratio."""
        self.kf_ratio[rotor] = kf_ratio
        self.km_ratio[rotor] = derive_km_ratio(kf_ratio)
