"""Exception types shared by the eigensolvers and I/O routines."""


class IndefiniteProblemError(RuntimeError):
    """The sign-stripped companion of the operator is not positive definite.

    Raised when a normalization radicand turns significantly negative, or
    when the projected problem produces negative Ritz values beyond roundoff.
    """


class FactorizationError(RuntimeError):
    """A small dense factorization failed to converge within its sweep cap."""


class MatrixIOError(RuntimeError):
    """A matrix file could not be parsed or violates its declared symmetry."""
