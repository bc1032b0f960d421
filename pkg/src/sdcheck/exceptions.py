"""Exception types shared across the package."""


class SdcheckError(Exception):
    """Base class for all package errors."""


class InvalidMatrix(SdcheckError):
    """Input is not a usable symmetric matrix (non-finite, non-square, or too asymmetric)."""


class InvalidDimension(SdcheckError):
    """Vector/matrix sizes are inconsistent."""


class InvalidMap(SdcheckError):
    """Constraint map is malformed (mixed orders, bad shapes)."""


class InfeasibleAffine(SdcheckError):
    """Rank-deficient constraint map with right-hand side outside its range."""


class OracleUnavailable(SdcheckError):
    """No certificate usable for exact forward-error computation."""


class EmptyFace(SdcheckError):
    """Face restriction with zero-dimensional range."""


class InvalidSample(SdcheckError):
    """A claimed feasible sample fails the feasibility check."""


class MaxIterations(SdcheckError):
    """Centering did not converge within the outer iteration budget."""

    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


class LineSearchStall(SdcheckError):
    """Centering line search cannot make progress; residuals attached."""

    def __init__(self, msg, residuals=None):
        super().__init__(msg)
        self.residuals = residuals


class InsufficientTrace(SdcheckError):
    """Path trace has too few points for the requested operation."""


class NoExposingVectorFound(SdcheckError):
    """Dual path limit is numerically zero: no exposing vector (Slater alternative)."""


class UndecidedAlternative(SdcheckError):
    """Strict feasibility could not be decided either way; never reported as a bare False."""


class FRDiverged(SdcheckError):
    """Facial reduction ran out of iterations without reaching strict feasibility."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class SdUndecided(SdcheckError):
    """Singularity degree could not be certified numerically; partial chain attached."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


class InvalidSeries(SdcheckError):
    """Series handed to a slope fit contains nonpositive entries or is too short."""


class InvalidSpec(SdcheckError):
    """Instance specification is out of the generator's domain."""


class GenFailed(SdcheckError):
    """Random generator kept producing degenerate draws."""


class OutOfDomain(SdcheckError):
    """Parameter outside the analytic fixture's domain."""
