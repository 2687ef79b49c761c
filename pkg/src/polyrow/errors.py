"""Exception types shared across the toolkit.

The CLI maps these onto stable exit codes: validation-type failures exit 2,
I/O failures exit 3 and numerical divergence exits 4.
"""


class PolyrowError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(PolyrowError, ValueError):
    """A parameter is outside its documented range."""


class DegeneratePolylineError(PolyrowError, ValueError):
    """Polyline has too few distinct points or zero total chord length."""


class InsufficientPointsError(PolyrowError, ValueError):
    """Fewer points than polynomial coefficients to fit."""


class DegenerateFitError(PolyrowError, ValueError):
    """Least-squares design matrix is rank deficient."""


class ValidationError(PolyrowError, ValueError):
    """Input data violates its documented schema or invariants."""


class InsufficientPredictionsError(PolyrowError, ValueError):
    """Fewer predictions than targets in a cost matrix."""


class OracleSizeError(PolyrowError, ValueError):
    """Exhaustive-search oracle called beyond its factorial size bound."""


class MissingEgoBoundaryError(PolyrowError, ValueError):
    """No row on one side of the image center; ego lane unresolvable."""


class DivergenceError(PolyrowError, ArithmeticError):
    """Iterative fit exceeded the loss blow-up guard."""
