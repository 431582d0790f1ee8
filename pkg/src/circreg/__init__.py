"""Angular regression of a circular response on a linear predictor, fitted by
minimising the mean torus square area of the angular residuals."""

__version__ = "0.1.0"

from .circular import (arc_contains, arc_width, circular_mean, circular_quantile,
                       circular_variance, wrap_angle)
from .torus import TorusGeometry, msae, square_of_angle
from .mobius import ModelParams, link, mobius_map, predict_curve
from .distributions import AngularErrorSpec, PredictorSpec, make_rng, von_mises_cdf
from .estimation import Dataset, FitConfig, FitResult, fit
from .bootstrap import IntervalResult, bootstrap_ci, bootstrap_pi
from .diagnostics import circular_linear_correlation, qq_points, watson_u2_vonmises
from .errors import CircRegError, FitError

__all__ = [
    "arc_contains", "arc_width", "circular_mean", "circular_quantile", "circular_variance",
    "wrap_angle", "TorusGeometry", "msae", "square_of_angle", "ModelParams", "link",
    "mobius_map", "predict_curve", "AngularErrorSpec", "PredictorSpec", "make_rng",
    "von_mises_cdf", "Dataset", "FitConfig", "FitResult", "fit", "IntervalResult",
    "bootstrap_ci", "bootstrap_pi", "circular_linear_correlation", "qq_points",
    "watson_u2_vonmises", "CircRegError", "FitError",
]
