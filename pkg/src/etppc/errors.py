"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the front end can
translate failures without a lookup table.
"""

from __future__ import annotations


class EtppcError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ParseError(EtppcError):
    """Scenario or trace file could not be read or understood."""

    exit_code = 2


class InvalidInputError(EtppcError, ValueError):
    """An argument violates a documented precondition."""

    exit_code = 2


class InfeasibleError(EtppcError):
    """A design inequality required by the stability analysis is violated.

    Attributes
    ----------
    condition : str
        Short name of the failing inequality, e.g. ``"B2 > 0"``.
    """

    exit_code = 3

    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        msg = f"infeasible: {condition} violated"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NumericError(EtppcError):
    """Non-finite state or other numerical breakdown during a run."""

    exit_code = 4

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularityError(NumericError):
    """|q_e0| fell below the guard where F_s cannot be inverted."""


class ContractViolation(EtppcError):
    """Caller broke a sequencing contract (e.g. non-monotone time)."""

    exit_code = 4


class CheckError(EtppcError):
    """A verification check failed (envelope, MIET, bookkeeping)."""

    exit_code = 5


class ConsistencyError(CheckError):
    """Logged values disagree with an independent recomputation."""


class ConfigMismatchError(CheckError):
    """Stored trace was produced by a different configuration."""
