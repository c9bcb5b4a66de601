"""Exception hierarchy shared by every module.

The CLI maps any PitmanError to exit code 1; AcceptanceError gets its own
exit code (3).
"""

from typing import Optional


class PitmanError(Exception):
    """Base class for numerical and input failures."""


class InadmissibleParameterError(PitmanError, ValueError):
    pass


class DomainError(PitmanError, ValueError):
    pass


class TableSizeError(PitmanError):
    pass


class TableValidationError(PitmanError):
    pass


class QuadratureError(PitmanError):
    pass


class NormalizationError(PitmanError):
    pass


class InvalidPartitionError(PitmanError, ValueError):
    pass


class DivergentMomentError(PitmanError):
    pass


class IngestError(PitmanError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInputError(IngestError):
    pass


class DegenerateSampleError(PitmanError):
    pass


class LimitExceededError(PitmanError):
    pass


class AcceptanceError(PitmanError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))
