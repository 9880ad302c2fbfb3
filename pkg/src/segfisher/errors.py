"""Exception hierarchy shared by all modules."""


class SegfisherError(Exception):
    """Base class for every error raised by this package."""


class ContractError(SegfisherError, ValueError):
    """Inputs violate a structural precondition (shape, zero direction, ...)."""


class DomainError(SegfisherError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class NotPositiveDefiniteError(DomainError):
    """Cholesky factorization failed."""


class PoleError(DomainError):
    """Evaluation point coincides with a pole 1 + a_j * theta = 0."""


class AdmissibilityError(DomainError):
    """Shape parameter outside the Gindikin set, or rank condition violated."""


class UnsupportedCaseError(SegfisherError):
    """A mathematically valid case that this package does not handle."""


class NumericalError(SegfisherError, ArithmeticError):
    """An iterative routine failed to converge or a system is too ill-conditioned."""


class PreconditionError(SegfisherError):
    """An operation needs a property the family does not have."""
