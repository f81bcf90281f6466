"""Simulation lab for pendulum swing-up under switched local/global control."""

from .dynamics import TimeGrid, Trajectory, SimulationDiverged, rk4_step, integrate
from .pendulum import PendulumParams, DisturbanceSpec
from .experiments import ExperimentConfig, ConfigError, parse_config, run_single, run_sweep

__version__ = "0.1.0"

__all__ = [
    "TimeGrid",
    "Trajectory",
    "SimulationDiverged",
    "rk4_step",
    "integrate",
    "PendulumParams",
    "DisturbanceSpec",
    "ExperimentConfig",
    "ConfigError",
    "parse_config",
    "run_single",
    "run_sweep",
    "__version__",
]
