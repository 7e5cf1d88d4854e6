"""Scenario configuration: schema, YAML loading, and stock scenarios.

A scenario fully determines a run: vehicle, gains, trajectory, adaptation
settings, fault and disturbance schedules, sensor noise, and the seed.
Identical configs produce bit-identical runs.
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .controller import Gains
from .dynamics import NoiseConfig
from .l1 import L1Params
from .trajectories import TrajectoryKind, TrajectorySpec, YawMode, figure_eight_period_for_peak
from .vehicle import VehicleParams


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class DamageEvent:
    time: float
    rotor: int          # 0..3
    kf_ratio: float     # thrust retention after the event

    def __post_init__(self):
        if not 0 <= self.rotor <= 3:
            raise ConfigError("rotor index must be 0..3")
        if not 0.0 <= self.kf_ratio <= 1.0:
            raise ConfigError("kf_ratio must lie in [0, 1]")


@dataclass(frozen=True)
class DisturbanceWindow:
    start: float
    end: float
    force_world: np.ndarray = field(default_factory=lambda: np.zeros(3))
    moment_body: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def active(self, t):
        return self.start <= t < self.end


@dataclass(frozen=True)
class GustConfig:
    """Band-limited stochastic disturbance (first-order Gauss-Markov).

    Each axis is an independent OU process with stationary standard
    deviation *_std and correlation time tau; all zeros disables it.
    Drawn from a stream separate from the sensor noise, so enabling
    gusts leaves the measurement sequence of a given seed untouched.
    """

    force_std: np.ndarray = field(default_factory=lambda: np.zeros(3))   # N, world
    moment_std: np.ndarray = field(default_factory=lambda: np.zeros(3))  # N m, body
    tau: float = 1.0    # s

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError("gust tau must be positive")

    @property
    def enabled(self):
        return bool(np.any(self.force_std > 0) or np.any(self.moment_std > 0))

    @classmethod
    def zero(cls):
        return cls()


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    duration: float = 10.0
    seed: int = 0
    sim_dt: float = 0.001
    control_dt: float = 0.002
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    gains: Gains = field(default_factory=Gains)
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    l1_enabled: bool = True
    l1: L1Params = field(default_factory=L1Params)
    integral_enabled: bool = False
    integral_gain_f: float = 3.0
    integral_gain_m: float = 0.3
    integral_clamp: float = 1.0
    estimator_window: int = 50
    prior_threshold: float = 0.05
    min_thrust_factor: float = 0.5
    negative_limit: float = -0.2
    supervisor_enabled: bool = True
    ft_threshold: float = 0.5
    ft_debounce: int = 25
    ft_rotor: int = -1                    # >= 0 starts the run already in FT mode
    spin_ceiling: float = 20.0
    spin_damping: float = 0.05
    tilt_budget: float = 0.4              # N m, FT tilt-moment clamp
    injection_mode: str = "coefficient"   # or "motor_input"
    damage_schedule: list = field(default_factory=list)
    disturbance_schedule: list = field(default_factory=list)
    gust: GustConfig = field(default_factory=GustConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    rmse_warmup: float = -1.0             # <0 picks a default at report time

    def __post_init__(self):
        if self.duration <= 0 or self.sim_dt <= 0 or self.control_dt <= 0:
            raise ConfigError("duration and step sizes must be positive")
        ratio = self.control_dt / self.sim_dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("control_dt must be an integer multiple of sim_dt")
        if self.injection_mode not in ("coefficient", "motor_input"):
            raise ConfigError("injection_mode must be 'coefficient' or 'motor_input'")
        if abs(self.l1.dt - self.control_dt) > 1e-12:
            # keep the adaptation discretization tied to the loop rate
            self.l1 = dataclasses.replace(self.l1, dt=self.control_dt)

    @property
    def steps_per_cycle(self):
        return int(round(self.control_dt / self.sim_dt))

    def default_warmup(self):
        if self.rmse_warmup >= 0.0:
            return self.rmse_warmup
        return self.trajectory.ramp


# ---------------------------------------------------------------------------
# dict/YAML (de)serialization


def _take(d, key, default):
    return d.pop(key) if key in d else default


def _reject_unknown(d, where):
    if d:
        raise ConfigError(f"unknown keys in {where}: {sorted(d)}")


def _vehicle_from(d):
    d = dict(d)
    inertia = _take(d, "inertia", [0.0035, 0.0035, 0.006])
    inertia = np.asarray(inertia, dtype=float)
    if inertia.shape == (3,):
        inertia = np.diag(inertia)
    kw = {}
    for name in ("mass", "gravity", "arm_x", "arm_y", "kf_model", "km_model",
                 "omega_max", "motor_tau"):
        if name in d:
            kw[name] = float(d.pop(name))
    _reject_unknown(d, "vehicle")
    try:
        return VehicleParams(inertia=inertia, **kw)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _gains_from(d):
    d = dict(d)
    kw = {k: np.asarray(d.pop(k), dtype=float) for k in ("kp", "kv", "kR", "komega") if k in d}
    for k in ("ft_kR", "ft_komega"):
        if k in d:
            kw[k] = float(d.pop(k))
    _reject_unknown(d, "gains")
    try:
        return Gains(**kw)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _trajectory_from(d):
    d = dict(d)
    try:
        kind = TrajectoryKind(_take(d, "kind", "hover"))
        yaw_mode = YawMode(_take(d, "yaw_mode", "fixed"))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    kw = dict(
        kind=kind,
        yaw_mode=yaw_mode,
        center=np.asarray(_take(d, "center", [0.0, 0.0, 1.0]), dtype=float),
        radii=np.asarray(_take(d, "radii", [0.0, 0.0, 0.0]), dtype=float),
        period=float(_take(d, "period", 0.0)),
        psi0=float(_take(d, "psi0", 0.0)),
        ramp_time=float(_take(d, "ramp_time", 0.0)),
    )
    _reject_unknown(d, "trajectory")
    try:
        return TrajectorySpec(**kw)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def from_dict(data):
    """Build a ScenarioConfig from a plain dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError("scenario config must be a mapping")
    d = dict(data)
    cfg = {}
    for name, cast in (("name", str), ("duration", float), ("seed", int),
                       ("sim_dt", float), ("control_dt", float),
                       ("injection_mode", str), ("rmse_warmup", float)):
        if name in d:
            cfg[name] = cast(d.pop(name))
    if "vehicle" in d:
        cfg["vehicle"] = _vehicle_from(d.pop("vehicle"))
    if "gains" in d:
        cfg["gains"] = _gains_from(d.pop("gains"))
    if "trajectory" in d:
        cfg["trajectory"] = _trajectory_from(d.pop("trajectory"))

    if "l1" in d:
        sub = dict(d.pop("l1"))
        cfg["l1_enabled"] = bool(_take(sub, "enabled", True))
        kw = {}
        if "lam" in sub:
            kw["lam"] = np.asarray(sub.pop("lam"), dtype=float)
        if "lpf_alpha" in sub:
            kw["lpf_alpha"] = np.asarray(sub.pop("lpf_alpha"), dtype=float)
        _reject_unknown(sub, "l1")
        ctrl_dt = cfg.get("control_dt", 0.002)
        try:
            cfg["l1"] = L1Params(dt=ctrl_dt, **kw)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    if "baseline_integral" in d:
        sub = dict(d.pop("baseline_integral"))
        cfg["integral_enabled"] = bool(_take(sub, "enabled", False))
        cfg["integral_gain_f"] = float(_take(sub, "gain_f", 3.0))
        cfg["integral_gain_m"] = float(_take(sub, "gain_m", 0.3))
        cfg["integral_clamp"] = float(_take(sub, "clamp", 1.0))
        _reject_unknown(sub, "baseline_integral")

    if "estimator" in d:
        sub = dict(d.pop("estimator"))
        cfg["estimator_window"] = int(_take(sub, "window", 50))
        cfg["prior_threshold"] = float(_take(sub, "prior_threshold", 0.05))
        cfg["min_thrust_factor"] = float(_take(sub, "min_thrust_factor", 0.5))
        cfg["negative_limit"] = float(_take(sub, "negative_limit", -0.2))
        _reject_unknown(sub, "estimator")

    if "supervisor" in d:
        sub = dict(d.pop("supervisor"))
        cfg["supervisor_enabled"] = bool(_take(sub, "enabled", True))
        cfg["ft_threshold"] = float(_take(sub, "threshold", 0.5))
        cfg["ft_debounce"] = int(_take(sub, "debounce", 25))
        _reject_unknown(sub, "supervisor")

    if "fault_tolerant" in d:
        sub = dict(d.pop("fault_tolerant"))
        cfg["ft_rotor"] = int(_take(sub, "rotor", -1))
        cfg["spin_ceiling"] = float(_take(sub, "spin_ceiling", 20.0))
        cfg["spin_damping"] = float(_take(sub, "spin_damping", 0.05))
        cfg["tilt_budget"] = float(_take(sub, "tilt_budget", 0.4))
        _reject_unknown(sub, "fault_tolerant")

    if "damage_schedule" in d:
        events = []
        for entry in d.pop("damage_schedule") or []:
            e = dict(entry)
            events.append(DamageEvent(time=float(_take(e, "time", 0.0)),
                                      rotor=int(_take(e, "rotor", 0)),
                                      kf_ratio=float(_take(e, "kf_ratio", 1.0))))
            _reject_unknown(e, "damage_schedule entry")
        cfg["damage_schedule"] = events

    if "disturbance_schedule" in d:
        wins = []
        for entry in d.pop("disturbance_schedule") or []:
            e = dict(entry)
            wins.append(DisturbanceWindow(
                start=float(_take(e, "start", 0.0)),
                end=float(_take(e, "end", np.inf)),
                force_world=np.asarray(_take(e, "force", [0, 0, 0]), dtype=float),
                moment_body=np.asarray(_take(e, "moment", [0, 0, 0]), dtype=float)))
            _reject_unknown(e, "disturbance_schedule entry")
        cfg["disturbance_schedule"] = wins

    if "gust" in d:
        sub = dict(d.pop("gust"))
        cfg["gust"] = GustConfig(
            force_std=np.asarray(_take(sub, "force_std", [0, 0, 0]), dtype=float),
            moment_std=np.asarray(_take(sub, "moment_std", [0, 0, 0]), dtype=float),
            tau=float(_take(sub, "tau", 1.0)))
        _reject_unknown(sub, "gust")

    if "noise" in d:
        sub = dict(d.pop("noise"))
        vel = np.asarray(_take(sub, "vel_std", [0, 0, 0]), dtype=float)
        om = np.asarray(_take(sub, "omega_std", [0, 0, 0]), dtype=float)
        _reject_unknown(sub, "noise")
        cfg["noise"] = NoiseConfig(vel_std=vel, omega_std=om)

    _reject_unknown(d, "scenario")
    try:
        return ScenarioConfig(**cfg)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e


def to_dict(cfg):
    """Plain-dict form of a config, round-trippable through from_dict."""
    t = cfg.trajectory
    out = {
        "name": cfg.name,
        "duration": cfg.duration,
        "seed": cfg.seed,
        "sim_dt": cfg.sim_dt,
        "control_dt": cfg.control_dt,
        "injection_mode": cfg.injection_mode,
        "rmse_warmup": cfg.rmse_warmup,
        "vehicle": {
            "mass": cfg.vehicle.mass,
            "inertia": np.diag(cfg.vehicle.inertia).tolist()
            if np.allclose(cfg.vehicle.inertia, np.diag(np.diag(cfg.vehicle.inertia)))
            else cfg.vehicle.inertia.tolist(),
            "gravity": cfg.vehicle.gravity,
            "arm_x": cfg.vehicle.arm_x,
            "arm_y": cfg.vehicle.arm_y,
            "kf_model": cfg.vehicle.kf_model,
            "km_model": cfg.vehicle.km_model,
            "omega_max": cfg.vehicle.omega_max,
            "motor_tau": cfg.vehicle.motor_tau,
        },
        "gains": dict(
            {k: getattr(cfg.gains, k).tolist() for k in ("kp", "kv", "kR", "komega")},
            ft_kR=cfg.gains.ft_kR, ft_komega=cfg.gains.ft_komega),
        "trajectory": {
            "kind": t.kind.value,
            "center": t.center.tolist(),
            "radii": t.radii.tolist(),
            "period": t.period,
            "yaw_mode": t.yaw_mode.value,
            "psi0": t.psi0,
            "ramp_time": t.ramp_time,
        },
        "l1": {
            "enabled": cfg.l1_enabled,
            "lam": cfg.l1.lam.tolist(),
            "lpf_alpha": cfg.l1.lpf_alpha.tolist(),
        },
        "baseline_integral": {
            "enabled": cfg.integral_enabled,
            "gain_f": cfg.integral_gain_f,
            "gain_m": cfg.integral_gain_m,
            "clamp": cfg.integral_clamp,
        },
        "estimator": {
            "window": cfg.estimator_window,
            "prior_threshold": cfg.prior_threshold,
            "min_thrust_factor": cfg.min_thrust_factor,
            "negative_limit": cfg.negative_limit,
        },
        "supervisor": {
            "enabled": cfg.supervisor_enabled,
            "threshold": cfg.ft_threshold,
            "debounce": cfg.ft_debounce,
        },
        "fault_tolerant": {
            "rotor": cfg.ft_rotor,
            "spin_ceiling": cfg.spin_ceiling,
            "spin_damping": cfg.spin_damping,
            "tilt_budget": cfg.tilt_budget,
        },
        "damage_schedule": [
            {"time": e.time, "rotor": e.rotor, "kf_ratio": e.kf_ratio}
            for e in cfg.damage_schedule
        ],
        "disturbance_schedule": [
            {"start": w.start,
             "end": float(w.end) if np.isfinite(w.end) else 1e9,
             "force": w.force_world.tolist(),
             "moment": w.moment_body.tolist()}
            for w in cfg.disturbance_schedule
        ],
        "gust": {
            "force_std": np.asarray(cfg.gust.force_std, dtype=float).tolist(),
            "moment_std": np.asarray(cfg.gust.moment_std, dtype=float).tolist(),
            "tau": cfg.gust.tau,
        },
        "noise": {
            "vel_std": np.asarray(cfg.noise.vel_std, dtype=float).tolist(),
            "omega_std": np.asarray(cfg.noise.omega_std, dtype=float).tolist(),
        },
    }
    return out


def load(path):
    """Load a scenario from a YAML file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    cfg = from_dict(data or {})
    if cfg.name == "scenario":
        cfg.name = Path(path).stem
    return cfg


def save(cfg, path):
    with open(path, "w") as fh:
        yaml.safe_dump(to_dict(cfg), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# stock scenarios used by the sweep tables and tests

DEFAULT_NOISE = NoiseConfig(vel_std=np.full(3, 0.002), omega_std=np.full(3, 0.004))

ELLIPSE_RADII = np.array([1.0, 0.6, 0.1])   # m


def hover(duration=10.0, seed=0, noise=True, name="hover"):
    return ScenarioConfig(
        name=name, duration=duration, seed=seed,
        trajectory=TrajectorySpec(kind=TrajectoryKind.HOVER, center=np.array([0.0, 0.0, 1.0])),
        noise=DEFAULT_NOISE if noise else NoiseConfig.zero(),
    )


def ellipse(period, duration=None, seed=0, noise=True, name=None):
    """Ellipse scenario; the three stock periods are 12, 8, and 5 s."""
    cfg = hover(seed=seed, noise=noise)
    cfg.trajectory = TrajectorySpec(
        kind=TrajectoryKind.ELLIPSE, center=np.array([0.0, 0.0, 1.0]),
        radii=ELLIPSE_RADII.copy(), period=float(period))
    cfg.duration = duration if duration is not None else 2.0 * period
    cfg.name = name or f"ellipse_{period:g}s"
    return cfg


def circle(speed=0.5, radius=1.0, duration=None, seed=0, noise=True, name=None):
    cfg = hover(seed=seed, noise=noise)
    period = 2.0 * np.pi * radius / speed
    cfg.trajectory = TrajectorySpec(
        kind=TrajectoryKind.CIRCLE, center=np.array([0.0, 0.0, 1.0]),
        radii=np.array([radius, radius, 0.0]), period=period)
    cfg.duration = duration if duration is not None else 2.0 * period
    cfg.name = name or f"circle_{speed:g}ms"
    return cfg


def figure_eight(peak_speed=3.0, rx=2.0, ry=1.0, duration=None, seed=0,
                 noise=True, name=None):
    cfg = hover(seed=seed, noise=noise)
    period = figure_eight_period_for_peak(rx, ry, peak_speed)
    cfg.trajectory = TrajectorySpec(
        kind=TrajectoryKind.FIGURE_EIGHT, center=np.array([0.0, 0.0, 1.0]),
        radii=np.array([rx, ry, 0.0]), period=period)
    cfg.duration = duration if duration is not None else 3.0 * period
    cfg.name = name or f"figure_eight_{peak_speed:g}ms"
    return cfg


def with_damage(cfg, rotor, level, time=2.0):
    """Add a single damage event; level is the mismatch (0.2 = 20 percent)."""
    cfg.damage_schedule = list(cfg.damage_schedule) + [
        DamageEvent(time=time, rotor=rotor, kf_ratio=1.0 - level)]
    return cfg


# Ambient conditions carried by every sweep run: a constant thrust deficit
# (battery sag / worn props) plus slow turbulent moments from airflow over
# the frame.  The adaptation absorbs both -- the deficit through the thrust
# channel, the gusts through the moment channels, whose bandwidth is far
# above 1/GUST_TAU -- while the plain controller trims them with steady or
# wandering offsets.  That is what separates the on/off columns even before
# any damage is injected.  Lateral force terms are deliberately zero: body
# x/y force is not correctable through the rotors, so it would bias both
# columns equally and only dilute the comparison.
TRIM_FORCE = np.array([0.0, 0.0, -0.3])        # N, world frame
GUST_MOMENT_STD = np.array([0.08, 0.08, 0.02])  # N m, body frame
GUST_TAU = 1.0                                  # s


def table_sweep(periods=(12.0, 8.0, 5.0), levels=(0.0, 0.2, 0.4, 0.6),
                l1_states=(True, False), damage_time=2.0, seed=0, ambient=True):
    """Cross of ellipse period x damage level x adaptation state.

    Estimation-only sweep: the supervisor is disabled so high damage
    levels stay in the adaptive mode for the whole run.
    """
    out = []
    for period in periods:
        for level in levels:
            for l1_on in l1_states:
                cfg = ellipse(period, seed=seed)
                cfg.l1_enabled = l1_on
                cfg.supervisor_enabled = False
                if ambient:
                    cfg.disturbance_schedule.append(DisturbanceWindow(
                        0.0, 1e9, TRIM_FORCE.copy()))
                    cfg.gust = GustConfig(moment_std=GUST_MOMENT_STD.copy(),
                                          tau=GUST_TAU)
                if level > 0.0:
                    with_damage(cfg, rotor=0, level=level, time=damage_time)
                tag = "l1on" if l1_on else "l1off"
                cfg.name = f"ellipse{period:g}s_dmg{int(level * 100)}_{tag}"
                out.append(cfg)
    return out
