"""Exception hierarchy shared by the estimators and the CLI."""


class MomentFitError(Exception):
    """Base class for every error raised by momentfit."""


class InvalidSamples(MomentFitError, ValueError):
    """Sample set is too small, non-finite or otherwise unusable."""


class OddOrder(MomentFitError, ValueError):
    """Moment order must be an even integer >= 2."""


class HankelNotPD(MomentFitError):
    """The moment Hankel matrix is not positive definite.

    For sample moments this happens only when the samples are all equal
    (or numerically indistinguishable from that case).
    """

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


# the name used in the docs for the sample-level pathology
DegenerateSamples = HankelNotPD


class InfeasiblePoint(MomentFitError, ValueError):
    """Coefficients violate positivity of the weight polynomial."""


class NotConverged(MomentFitError):
    """Iteration cap reached before the stopping rule was met.

    The last iterate is attached as ``estimate`` (may be ``None``).
    """

    def __init__(self, message, gradient_norm=None, estimate=None):
        super().__init__(message)
        self.gradient_norm = gradient_norm
        self.estimate = estimate


class LineSearchStalled(NotConverged):
    """Backtracking could not find a feasible descent step."""


class NonIntegrable(MomentFitError):
    """Exponential-polynomial density with a non-positive leading term."""


class NegativeResult(MomentFitError):
    """An entropy gap came out negative beyond round-off."""


class SupportMismatch(MomentFitError, ValueError):
    """The second density underflows where the first carries mass."""


class NonFiniteIntegrand(MomentFitError, ValueError):
    """Integrand returned inf/nan at a quadrature node."""


class CollapsedComponent(MomentFitError):
    """A mixture component's variance fell below the floor."""
