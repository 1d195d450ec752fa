"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code so command-line failures are
distinguishable by category (see ``netwelfare.cli``).
"""

from __future__ import annotations


class NetwelfareError(Exception):
    """Base class for package errors."""

    exit_code = 1


class ConfigError(NetwelfareError):
    """Malformed configuration: unknown keys, bad types, missing columns."""

    exit_code = 2


class DataIntegrityError(NetwelfareError):
    """Inconsistent data: dangling edge ids, non-binary treatment, NaNs."""

    exit_code = 3


class NumericalError(NetwelfareError):
    """Numerical failure: non-convergence, degenerate linear systems."""

    exit_code = 4


class SeparationError(NumericalError):
    """Perfect separation in the treatment model; the MLE does not exist."""


class BackendUnavailableError(NetwelfareError):
    """A requested solve backend cannot handle the given problem."""

    exit_code = 5
