"""Exception hierarchy shared by all stages.

The cli maps these onto its exit codes (2 validation, 3 solver, 4 I/O).
"""


class PatchkitError(Exception):
    """Base class for all package errors."""


class DomainError(PatchkitError, ValueError):
    """An input lies outside the domain of a closed-form model."""


class UnmatchableError(DomainError):
    """Requested impedance cannot be reached by an inset feed."""


class OverCoupledError(DomainError):
    """Coupling coefficient at or above 1."""


class GeometryError(PatchkitError, ValueError):
    """A geometry cannot be built (margins, placement)."""


class MarginError(GeometryError):
    pass


class PlacementError(GeometryError):
    pass


class ValidationError(PatchkitError, ValueError):
    """Run-file or configuration validation failure.

    ``path`` names the offending ``section.field``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SolverError(PatchkitError, RuntimeError):
    """FDTD instability, budget exhaustion or bad solver setup."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class EnergyAccountingError(PatchkitError, ValueError):
    """Radiated power exceeds accepted power beyond numerical tolerance."""
