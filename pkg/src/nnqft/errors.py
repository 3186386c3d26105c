"""Exception types shared across the package.

Every exception carries a short machine-readable ``code`` so the CLI can
emit structured error JSON; messages stay human-readable.
"""

from __future__ import annotations


class NnqftError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, code: str = "error", **details):
        super().__init__(message)
        self.code = code
        self.details = details


class ConfigurationError(NnqftError):
    def __init__(self, message: str, code: str = "configuration", **details):
        super().__init__(message, code=code, **details)


class ValidationError(ConfigurationError):
    """Joint report of every violated configuration invariant.

    ``violations`` is a list of ``(code, message)`` pairs, one per broken
    invariant, so callers see all problems at once.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        codes = ", ".join(code for code, _ in self.violations)
        lines = "; ".join(msg for _, msg in self.violations)
        super().__init__(f"invalid configuration [{codes}]: {lines}", code="validation")


class KernelDomainError(NnqftError):
    def __init__(self, message: str, **details):
        super().__init__(message, code="kernel-domain", **details)


class DegenerateInputError(NnqftError):
    def __init__(self, message: str, **details):
        super().__init__(message, code="degenerate-input", **details)


class DegenerateMeasureError(NnqftError):
    def __init__(self, message: str, **details):
        super().__init__(message, code="degenerate-measure", **details)


class NumericOverflowError(NnqftError):
    def __init__(self, message: str, **details):
        super().__init__(message, code="numeric-overflow", **details)


class PairingError(NnqftError):
    """Raised for unusable contraction arities (odd or too large)."""


class QuadratureError(NnqftError):
    """Non-convergent numerical integration; carries the last estimate."""

    def __init__(self, message: str, estimate=None, residual=None, **details):
        super().__init__(message, code="quadrature-no-convergence", **details)
        self.estimate = estimate
        self.residual = residual


class InsufficientSignalError(NnqftError):
    def __init__(self, message: str, **details):
        super().__init__(message, code="insufficient-signal", **details)


class CollinearFeaturesError(NnqftError):
    def __init__(self, message: str, **details):
        super().__init__(message, code="collinear-features", **details)


class SnapshotError(NnqftError):
    def __init__(self, message: str, code: str = "snapshot", **details):
        super().__init__(message, code=code, **details)
