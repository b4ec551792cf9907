"""Exception hierarchy shared by the numerical and physics modules."""

from __future__ import annotations


class CombError(Exception):
    """Base class for every error raised by this package."""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context

    def record(self) -> dict:
        """Machine-readable summary used by the CLI error channel."""
        return {
            "error": type(self).__name__,
            "message": str(self),
            "context": {k: _plain(v) for k, v in self.context.items()},
        }


def _plain(value):
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, complex):
        return [value.real, value.imag]
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


# numerics
class QuadratureBudgetError(CombError, ArithmeticError):
    pass


class TailEstimateError(CombError, ArithmeticError):
    pass


class NoSignChangeError(CombError, ValueError):
    pass


# special functions
class PolylogDomainError(CombError, ValueError):
    pass


class BranchCutError(CombError, ValueError):
    pass


# scattering / spectrum
class PoleProximityError(CombError, ArithmeticError):
    pass


class TransparencyError(CombError, ValueError):
    pass


class GridTooCoarseError(CombError, ValueError):
    pass


class RootBracketingError(CombError, ArithmeticError):
    pass


class UnsupportedSpectrumError(CombError, NotImplementedError):
    pass


# energies
class ContourCrossingError(CombError, ArithmeticError):
    pass


class UnitarityViolationError(CombError, ValueError):
    pass


class StepCollisionError(CombError, ValueError):
    pass


class ConfigError(CombError, ValueError):
    pass
