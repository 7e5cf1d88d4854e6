"""quadfault: quadrotor flight simulation with adaptive control, per-rotor
damage estimation, and supervised fault-tolerant transition."""

__version__ = "0.1.0"

from .controller import Gains, GeometricController, IntegralBaseline, allocate
from .damage import DamageEstimator, DamageObservation, EstimateUnavailable
from .dynamics import ExternalDisturbance, NoiseConfig, RigidBodyState
from .fault_tolerant import Mode, SupervisorState, supervise
from .harness import RunResult, rmse_report, run, sweep
from .l1 import L1Controller, L1Params
from .scenario import ScenarioConfig, from_dict, load, save
from .trajectories import TrajectoryKind, TrajectorySetpoint, TrajectorySpec, setpoint
from .vehicle import DamageProfile, VehicleParams, Wrench, derive_km_ratio

__all__ = [
    "Gains", "GeometricController", "IntegralBaseline", "allocate",
    "DamageEstimator", "DamageObservation", "EstimateUnavailable",
    "ExternalDisturbance", "NoiseConfig", "RigidBodyState",
    "Mode", "SupervisorState", "supervise",
    "RunResult", "rmse_report", "run", "sweep",
    "L1Controller", "L1Params",
    "ScenarioConfig", "from_dict", "load", "save",
    "TrajectoryKind", "TrajectorySetpoint", "TrajectorySpec", "setpoint",
    "DamageProfile", "VehicleParams", "Wrench", "derive_km_ratio",
    "__version__",
]
