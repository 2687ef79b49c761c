"""polyrow: closed-form polynomial crop-row detection mathematics.

Chord-length row parameterization, an analytic curve-alignment energy loss
with its gradient, Hungarian prediction-to-label matching, a detection metric
suite (MPD, AP, TuSimple, LPD), synthetic dataset generation and a
gradient-descent loss-ablation harness.
"""

from .errors import (
    DegenerateFitError,
    DegeneratePolylineError,
    DivergenceError,
    InsufficientPointsError,
    InsufficientPredictionsError,
    MissingEgoBoundaryError,
    OracleSizeError,
    ParameterError,
    PolyrowError,
    ValidationError,
)
from .geometry import (
    LambdaParam,
    Point2,
    PolyCurve,
    Polyline,
    Prediction,
    chord_lambda,
    eval_curve,
    fit_polyline,
    sample_equidistant,
    sort_by_v,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateFitError",
    "DegeneratePolylineError",
    "DivergenceError",
    "InsufficientPointsError",
    "InsufficientPredictionsError",
    "MissingEgoBoundaryError",
    "OracleSizeError",
    "ParameterError",
    "PolyrowError",
    "ValidationError",
    "LambdaParam",
    "Point2",
    "PolyCurve",
    "Polyline",
    "Prediction",
    "chord_lambda",
    "eval_curve",
    "fit_polyline",
    "sample_equidistant",
    "sort_by_v",
    "__version__",
]
