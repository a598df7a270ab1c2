"""Density estimation on the real line by exact power-moment matching.

The main estimator (``hellinger.solve``) returns ``r / omega**2`` for a
Gaussian reference ``r`` and a positive polynomial ``omega``, chosen so the
first ``2n`` power moments equal the sample moments.
"""

from .errors import (
    CollapsedComponent,
    HankelNotPD,
    InfeasiblePoint,
    InvalidSamples,
    LineSearchStalled,
    MomentFitError,
    NegativeResult,
    NonFiniteIntegrand,
    NonIntegrable,
    NotConverged,
    OddOrder,
    SupportMismatch,
)
from .hellinger import DensityEstimate, OmegaCoefficients, SolveOptions, fit, solve
from .moments import MomentSequence, build_hankel, certify_positive_definite, compute_sample_moments
from .priors import GaussianPrior, default_prior
from .quadrature import QuadratureGrid, build_grid, grid_for_prior, integrate

__version__ = "0.1.0"
