"""Prescribed-performance (funnel) trajectory tracking for a quadrotor.

The controller needs no mass, inertia or disturbance model: every tracking
error is kept inside a shrinking exponential envelope by a cascade of
normalized-error feedbacks.
"""
__version__ = "0.1.0"

from .config import dump_config, load_config, load_preset, save_config
from .controller import (ControlDiagnostics, GainSet, ReferenceSample, TheoremConditions,
                         check_conditions, compute_control)
from .errors import (ConfigError, FunnelViolation, InitialComplianceError, InversionError,
                     NonFiniteStateError, SingularityError, ThrustDegenerate)
from .funnel import CHANNELS, FunnelSet, PerformanceFunction
from .plant import ControlCommand, DisturbanceSpec, QuadParams, VehicleState
from .sim import RunReport, SimConfig, SimRecord, metrics, rk4_step, run, validate_initial
from .trajectories import TrajectoryKind

__all__ = [
    "CHANNELS", "ConfigError", "ControlCommand", "ControlDiagnostics", "DisturbanceSpec",
    "FunnelSet", "FunnelViolation", "GainSet", "InitialComplianceError", "InversionError",
    "NonFiniteStateError", "PerformanceFunction", "QuadParams", "ReferenceSample", "RunReport",
    "SimConfig", "SimRecord", "SingularityError", "TheoremConditions", "ThrustDegenerate",
    "TrajectoryKind", "VehicleState", "check_conditions", "compute_control", "dump_config",
    "load_config", "load_preset", "metrics", "rk4_step", "run", "save_config", "validate_initial",
]
