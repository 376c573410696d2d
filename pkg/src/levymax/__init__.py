"""Running maxima of Levy processes under exponential killing and Poisson inspection.

Submodules
----------
models       Levy models, exponents, right-inverses
paths        exact samplers for the max and last argmax over a horizon
inspection   Poisson-inspected random walks
lindley      Lindley-type recursions and their fixed points
transforms   closed-form joint transforms and moments (one-sided models)
stats        two-sample tests and calibration helpers
verify       named verification experiments and the acceptance suite
cli          command-line interface
"""

__version__ = "0.1.0"

from .errors import LevyMaxError
from .inspection import InspectedWalk, InspectionParams, WalkBatch, sample_inspected_walks
from .models import PRESETS, ExponentEval, Kind, LevyModel, Side, right_inverse
from .paths import ExtremaBatch, PathExtrema, sample_continuous_pairs
from .rng import RngStream
from .stats import EmpiricalSample, TestReport
from .transforms import MomentReport, moments_inspected

__all__ = [
    "__version__",
    "LevyMaxError",
    "InspectedWalk",
    "InspectionParams",
    "WalkBatch",
    "sample_inspected_walks",
    "PRESETS",
    "ExponentEval",
    "Kind",
    "LevyModel",
    "Side",
    "right_inverse",
    "ExtremaBatch",
    "PathExtrema",
    "sample_continuous_pairs",
    "RngStream",
    "EmpiricalSample",
    "TestReport",
    "MomentReport",
    "moments_inspected",
]
