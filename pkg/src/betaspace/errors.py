"""Exception hierarchy shared by all betaspace modules."""

from __future__ import annotations


class BetaSpaceError(Exception):
    """Base class for every error raised by this package."""


class NonIncreasingLengths(BetaSpaceError, ValueError):
    pass


class NonPositiveEffectiveLength(BetaSpaceError, ValueError):
    pass


class OutOfRangeInput(BetaSpaceError, ValueError):
    pass


class InvalidBeta(BetaSpaceError, ValueError):
    pass


class SearchExhausted(BetaSpaceError, RuntimeError):
    pass


class UnsupportedMethod(BetaSpaceError, ValueError):
    pass


class InvalidConfiguration(BetaSpaceError, ValueError):
    pass


class DegenerateCloud(BetaSpaceError, ValueError):
    pass


class SelfIntersecting(BetaSpaceError, ValueError):
    pass


class NonPositiveGain(BetaSpaceError, ValueError):
    pass


class DimensionMismatch(BetaSpaceError, ValueError):
    pass


class NumericalOverflow(BetaSpaceError, ArithmeticError):
    """State norm left the configured bound during simulation."""

    def __init__(self, message: str, time: float | None = None, step: int | None = None):
        super().__init__(message)
        self.time = time
        self.step = step


class NoConvergence(BetaSpaceError, ArithmeticError):
    pass


class ConfigError(BetaSpaceError, ValueError):
    pass
