"""Exception types raised by the numerical core and the experiment harness."""

from typing import Optional


class CampanatoError(ValueError):
    """Base class for every error raised by this package."""


class ConfigurationError(CampanatoError):
    """Experiment or domain configuration is invalid or inconsistent."""


class GridError(CampanatoError):
    pass


class DegenerateBallError(GridError):
    pass


class EngineError(CampanatoError):
    """Engine construction failed (budget, eigensolver, potential)."""


class PotentialError(CampanatoError):
    pass


class NumericalError(CampanatoError):
    """A numerical check could not produce a meaningful answer."""


class InsufficientDynamicRangeError(NumericalError):
    pass


class DegenerateNormalizerError(NumericalError):
    pass


class QuadratureError(NumericalError):
    pass


class TraceBoundError(NumericalError):
    pass


class StageError(CampanatoError):
    """Wraps an error raised inside a named experiment stage."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")

    @property
    def is_configuration(self) -> bool:
        return isinstance(self.cause, ConfigurationError)


def describe(error: Exception, stage: Optional[str] = None) -> str:
    if stage:
        return f"[{stage}] {type(error).__name__}: {error}"
    return f"{type(error).__name__}: {error}"
