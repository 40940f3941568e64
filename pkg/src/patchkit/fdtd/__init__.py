from .grid import MaterialGrid
from .records import TimeSeriesRecord
from .solver import (
    FieldState,
    GaussianPulse,
    PortSpec,
    Simulation,
    SimulationConfig,
    reference_run,
    run,
)

__all__ = [
    "FieldState",
    "GaussianPulse",
    "MaterialGrid",
    "PortSpec",
    "Simulation",
    "SimulationConfig",
    "TimeSeriesRecord",
    "reference_run",
    "run",
]
