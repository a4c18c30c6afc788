"""Exception hierarchy shared by every module."""
from __future__ import annotations


class CompProbError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    code = "error"


class FastCauchyViolation(CompProbError):
    code = "fast_cauchy_violation"


class InvalidIndex(CompProbError, ValueError):
    code = "invalid_index"


class IrrationalDistance(CompProbError):
    code = "irrational_distance"


class SupportTooLarge(CompProbError):
    code = "support_too_large"


class UnboundedSpace(CompProbError):
    code = "unbounded_space"


class InvalidParameter(CompProbError, ValueError):
    code = "invalid_parameter"


class BudgetExhausted(CompProbError):
    """A semidecision did not halt within its budget.

    Not a failure: the query is restartable with a larger budget.  ``partial``
    carries whatever was certified before the budget ran out.
    """

    code = "budget_exhausted"

    def __init__(self, message: str = "budget exhausted", partial=None):
        super().__init__(message)
        self.partial = partial


class InvalidExpansion(CompProbError):
    code = "invalid_expansion"


class UncertifiedBounds(CompProbError):
    code = "uncertified_bounds"


class CertificateViolation(CompProbError):
    """A staged integral lower bound exceeded 1 for a randomness test."""

    code = "certificate_violation"


class RepMismatch(CompProbError):
    code = "rep_mismatch"


class MalformedDocument(CompProbError, ValueError):
    code = "malformed_document"
