"""Exception types shared across the package.

The library is strict-fail: invalid parameters raise instead of being
clamped, because silently repaired inputs would corrupt parameter-sweep
studies. ``ParameterError`` collects every violated constraint it can
find so a bad configuration is reported in one pass.
"""

from __future__ import annotations


class PassiveQkdError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(PassiveQkdError, ValueError):
    """One or more input parameters lie outside their valid domain.

    Attributes
    ----------
    violations : list of str
        Human-readable description of every violated constraint.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ModelInconsistencyError(PassiveQkdError):
    """Inputs that are individually valid describe an impossible state,
    e.g. a conditional variance exceeding the corresponding total."""


class NumericalDomainError(PassiveQkdError, ArithmeticError):
    """A numerical intermediate left its mathematically allowed domain
    by more than the configured tolerance (e.g. an eigenvalue
    discriminant that should be nonnegative)."""


class DegenerateDataError(PassiveQkdError):
    """Sample data admits no well-defined estimate (e.g. a zero-variance
    block makes the Pearson correlation undefined)."""


class UnidentifiableFitError(PassiveQkdError):
    """The fit design carries no information about the parameter
    (all model basis values are zero)."""


class BatchSizeError(PassiveQkdError):
    """A requested batch cannot be generated under the stated resource
    or shape constraints; raised before any sampling starts."""
