"""Curve clustering with regression mixtures, including a robust EM that estimates K."""

from .basis import BasisSpec, DesignMatrix, InvalidInputError, bspline_design, polynomial_design
from .datagen import generate_three_class, generate_two_class, sample_from_mixture
from .em_robust import RobustFitConfig, fit_robust_em
from .em_standard import StandardFitConfig, fit_standard_em
from .metrics import adjusted_rand_index, evaluate
from .model import (
    CurveSet,
    FitResult,
    FitTrace,
    InvalidParameterError,
    MixtureParams,
    map_partition,
    observed_log_likelihood,
    penalized_log_likelihood,
    posterior_probabilities,
)

__version__ = "0.1.0"
