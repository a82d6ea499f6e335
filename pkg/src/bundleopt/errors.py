"""Exception hierarchy shared by every bundleopt module."""


class BundleoptError(Exception):
    """Base class for all errors raised by bundleopt."""


class ContractViolation(BundleoptError, ValueError):
    """An operation was called with arguments that break its contract
    (overlapping bundles, a bundle outside the menu, ...)."""


class InputDomainError(BundleoptError, ValueError):
    """A numeric argument lies outside the domain of the operation."""


class DegenerateModelError(BundleoptError, ValueError):
    """The model carries no usable ordering or variation."""


class PreconditionError(BundleoptError, ValueError):
    """A documented precondition of the operation does not hold."""


class QuasiConcavityError(PreconditionError):
    """A curve that must be single-peaked is not.

    ``witness`` holds the offending triple ``(t1, t2, t3)``.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ConditionIVViolation(PreconditionError):
    """The batch size with the largest conditional volume is not unique."""

    def __init__(self, message, tied=()):
        super().__init__(message)
        self.tied = tuple(tied)


class ModelFormatError(BundleoptError, ValueError):
    """A JSON model document is malformed or violates a model invariant."""
