"""Exception hierarchy.

Every domain failure derives from :class:`DomainError`; the CLI maps those to
exit code 1. Anything else escaping a command is a bug.
"""

from __future__ import annotations


class DomainError(ValueError):
    """Base class for failures that reflect inputs or parameters, not bugs."""

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), **_plain(self.details)}


def _plain(d: dict) -> dict:
    out = {}
    for key, value in d.items():
        if isinstance(value, (int, float, str, bool)) or value is None:
            out[key] = value
        elif isinstance(value, (list, tuple)):
            out[key] = [v if isinstance(v, (int, float, str, bool)) else repr(v) for v in value]
        else:
            out[key] = repr(value)
    return out


# profiles
class OutOfDomain(DomainError):
    pass


class AmbiguousAtBreakpoint(DomainError):
    pass


class DomainMismatch(DomainError):
    pass


# curvature
class NonSmoothPoint(DomainError):
    pass


class SingularMetric(DomainError):
    pass


class StepTooLarge(DomainError):
    pass


# smoothing
class EpsExceedsDomain(DomainError):
    pass


class ValueMismatchAtJunction(DomainError):
    pass


class NoAdmissibleEps(DomainError):
    pass


# constructions
class InfeasibleParameters(DomainError):
    pass


class JunctionSignViolation(DomainError):
    pass


class PositivityFail(DomainError):
    pass


class EpsilonTooLarge(DomainError):
    pass


class NoAdmissibleLambda(DomainError):
    pass


class SpliceOverflow(DomainError):
    pass


class NoAdmissibleA(DomainError):
    pass


# skewalg
class ParityBoundViolation(DomainError):
    pass


class EllTooSmall(DomainError):
    pass


# linking
class IntersectionTooLarge(DomainError):
    pass


class ShapeMismatch(DomainError):
    pass


class NotConnected(DomainError):
    pass
