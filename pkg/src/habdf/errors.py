"""Exception types shared across the package."""

__all__ = [
    "HabdfError",
    "ContractViolationError",
    "DegenerateGeometryError",
    "InsufficientDetectorsError",
    "ConfigError",
    "RecordFormatError",
]


class HabdfError(Exception):
    """Base class for errors raised by this package."""


class ContractViolationError(HabdfError, ValueError):
    """An argument violates a documented precondition (shape, sign, finiteness)."""


class DegenerateGeometryError(HabdfError):
    """A covariance needed for an inverse is singular or numerically hopeless.

    Carries the offending condition-number estimate in ``condition``.
    """

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class InsufficientDetectorsError(HabdfError, ValueError):
    """Fewer detectors than majority voting can support (minimum is 3)."""


class ConfigError(HabdfError, ValueError):
    """A config file or override is malformed; message carries file/line/key."""


class RecordFormatError(HabdfError, ValueError):
    """A CSV record file is malformed; message carries path and row number."""
