"""Exception types shared across the package.

Plain ValueError is used for malformed arguments; the classes here cover
failure modes that callers may want to catch individually.
"""

from __future__ import annotations


class SturmspecError(Exception):
    """Base class for domain-specific failures."""


class PrecisionError(SturmspecError):
    """An orbit point could not be separated from an interval endpoint.

    Carries the offending site so callers can report it.
    """

    def __init__(self, site: int, message: str = ""):
        self.site = site
        super().__init__(message or f"cannot resolve orbit point at site {site}")


class NumericRangeError(SturmspecError):
    """A matrix product left the supported floating-point range."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"entry overflow after {index} factors")


class ResourceLimitError(SturmspecError):
    """A length or depth budget would be exceeded."""


class InternalConsistencyError(SturmspecError):
    """A structural property that should hold by construction failed."""


class DegeneracyError(SturmspecError):
    """An algebraic combination is too close to a pole to evaluate."""


class RefinementError(SturmspecError):
    """Grid refinement failed to stabilise a band count."""


class ExponentFitError(SturmspecError):
    """A growth-exponent fit produced an unusable result."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
