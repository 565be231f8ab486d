"""Exception types shared across the package."""

from __future__ import annotations


class IifsError(Exception):
    """Base class for all package errors."""


class InvalidInputError(IifsError):
    """A caller-supplied value violates a documented precondition."""


class InfeasibleError(IifsError):
    """A search or construction cannot succeed within its stated budget."""


class AmbiguousPointError(IifsError):
    """A point sits on a fundamental-interval boundary; its coding is not unique."""


class HorizonError(IifsError):
    """A table or enumeration horizon is too small for the requested index."""


class UndefinedRatioError(IifsError):
    """A log-ratio is undefined because the denominator sequence is <= 1."""


class PrecisionError(IifsError):
    """An enclosure comparison stayed indeterminate at the maximum precision."""
