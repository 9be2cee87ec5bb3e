"""
Error hierarchy

Every failure raised by mcblab derives from MCBLabError so that the
command line can map it onto an exit code and an error manifest.
"""

from typing import Any, Optional


class MCBLabError(Exception):
    """Base class for all mcblab errors."""


class ParameterError(MCBLabError, ValueError):
    """An argument lies outside its admissible range."""


class PoleError(ParameterError):
    """The jump density was evaluated at its pole y1 = 1."""


class InfiniteMassError(ParameterError):
    """An Axis1 interval contains the pole and carries infinite mass."""


class PreconditionError(MCBLabError):
    """The input violates an operation precondition."""


class NoJumpError(MCBLabError):
    """A jump was applied to the origin, where the jump rate is zero."""


class ConfigError(MCBLabError):
    """An experiment configuration failed to parse or validate."""

    def __init__(self, message: str, field_path: str = ""):
        self.field_path = field_path
        prefix = f"{field_path}: " if field_path else ""
        super().__init__(f"{prefix}{message}")


class ResourceLimitError(MCBLabError):
    """A run exceeded its step budget; `partial` holds what was produced."""

    def __init__(self, message: str, partial: Optional[Any] = None):
        self.partial = partial
        super().__init__(message)
