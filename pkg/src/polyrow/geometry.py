"""Row geometry: polylines, chord-length parameterization and parametric fits.

A row is an ordered polyline of image points (u, v) in normalized coordinates
(u across the image, v down, v = 1 at the bottom edge nearest the camera).
Each polyline gets a parameter lambda in [0, 1] proportional to cumulative
chord length, and is then represented by two polynomials u = U(lambda),
v = V(lambda).  Unlike a v-major form u = f(v), this pair stays well defined
for rows at any orientation, including horizontal ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    DegenerateFitError,
    DegeneratePolylineError,
    InsufficientPointsError,
    ParameterError,
)

# Points closer than this in both coordinates are treated as duplicates.
MERGE_TOLERANCE = 1e-9

MAX_DEGREE = 5
DEFAULT_DEGREE = 2


@dataclass(frozen=True)
class Point2:
    """A point in normalized image coordinates."""

    u: float
    v: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ParameterError(f"point coordinates must be finite, got ({self.u}, {self.v})")


@dataclass(frozen=True)
class Polyline:
    """An ordered sequence of at least two points."""

    points: tuple[Point2, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        if len(self.points) < 2:
            raise DegeneratePolylineError(f"polyline needs >= 2 points, got {len(self.points)}")

    @classmethod
    def from_pairs(cls, pairs) -> "Polyline":
        return cls(tuple(Point2(float(u), float(v)) for u, v in pairs))

    def as_array(self) -> np.ndarray:
        return np.array([(p.u, p.v) for p in self.points], dtype=float)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class LambdaParam:
    """Normalized cumulative chord-length parameter values for a polyline.

    Always starts at 0, ends at 1 and is strictly increasing.
    """

    lambdas: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        lam = self.lambdas
        if len(lam) < 2:
            raise ParameterError("lambda parameterization needs >= 2 values")
        if lam[0] != 0.0 or lam[-1] != 1.0:
            raise ParameterError(f"lambda must span [0, 1], got [{lam[0]}, {lam[-1]}]")
        if any(b <= a for a, b in zip(lam, lam[1:])):
            raise ParameterError("lambda values must be strictly increasing")

    def as_array(self) -> np.ndarray:
        return np.array(self.lambdas, dtype=float)

    def __len__(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class PolyCurve:
    """A parametric row: u = U(lambda), v = V(lambda), lambda in [0, 1].

    Coefficients are stored in ascending powers (lambda^0 first).  The two
    coefficient vectors are zero-padded to a common length of at least two,
    so every curve has degree >= 1.
    """

    u_coeffs: tuple[float, ...]
    v_coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        u = tuple(float(c) for c in self.u_coeffs)
        v = tuple(float(c) for c in self.v_coeffs)
        if not u or not v:
            raise ParameterError("curve needs at least one coefficient per axis")
        width = max(len(u), len(v), 2)
        u = u + (0.0,) * (width - len(u))
        v = v + (0.0,) * (width - len(v))
        if not all(math.isfinite(c) for c in u + v):
            raise ParameterError("curve coefficients must be finite")
        object.__setattr__(self, "u_coeffs", u)
        object.__setattr__(self, "v_coeffs", v)

    @property
    def degree(self) -> int:
        return len(self.u_coeffs) - 1

    def u_array(self) -> np.ndarray:
        return np.array(self.u_coeffs, dtype=float)

    def v_array(self) -> np.ndarray:
        return np.array(self.v_coeffs, dtype=float)


@dataclass(frozen=True)
class Prediction:
    """A predicted row: a parametric curve plus a confidence score."""

    curve: PolyCurve
    confidence: float

    def __post_init__(self) -> None:
        c = float(self.confidence)
        if not (0.0 <= c <= 1.0):
            raise ParameterError(f"confidence must lie in [0, 1], got {c}")
        object.__setattr__(self, "confidence", c)


def sort_by_v(polyline: Polyline) -> Polyline:
    """Canonicalize a polyline: stable sort by v, merge duplicate points.

    Points whose u and v both differ by at most MERGE_TOLERANCE from the
    previous kept point are dropped.  Raises DegeneratePolylineError when
    fewer than two distinct points remain.
    """
    ordered = sorted(polyline.points, key=lambda p: p.v)
    kept = [ordered[0]]
    for p in ordered[1:]:
        q = kept[-1]
        if abs(p.u - q.u) <= MERGE_TOLERANCE and abs(p.v - q.v) <= MERGE_TOLERANCE:
            continue
        kept.append(p)
    if len(kept) < 2:
        raise DegeneratePolylineError("fewer than 2 distinct points after deduplication")
    return Polyline(tuple(kept))


def chord_lambda(polyline: Polyline) -> LambdaParam:
    """Normalized cumulative chord length of a canonically sorted polyline."""
    pts = polyline.as_array()
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(seg <= 0.0):
        raise DegeneratePolylineError("zero-length chord; polyline not deduplicated")
    csum = np.cumsum(seg)
    total = csum[-1]
    if total <= 0.0:
        raise DegeneratePolylineError("polyline has zero total chord length")
    # Dividing the cumulative sum by its own last element pins lambda[-1] to
    # exactly 1.0.
    lam = np.concatenate(([0.0], csum / total))
    return LambdaParam(tuple(lam))


def eval_curve(curve: PolyCurve, lam: float) -> Point2:
    """Evaluate (U(lambda), V(lambda)) at one parameter value (Horner form)."""
    if not math.isfinite(lam):
        raise ParameterError(f"lambda must be finite, got {lam}")
    u = float(P.polyval(lam, curve.u_array()))
    v = float(P.polyval(lam, curve.v_array()))
    return Point2(u, v)


def eval_curve_many(curve: PolyCurve, lambdas: np.ndarray) -> np.ndarray:
    """Evaluate a curve at an array of parameters; returns an (n, 2) array."""
    lambdas = np.asarray(lambdas, dtype=float)
    u = P.polyval(lambdas, curve.u_array())
    v = P.polyval(lambdas, curve.v_array())
    return np.column_stack((u, v))


def sample_equidistant(curve: PolyCurve, s_p: int) -> list[Point2]:
    """Sample the curve at s_p equidistant lambda values from 0 to 1."""
    if s_p < 2:
        raise ParameterError(f"need at least 2 sample points, got {s_p}")
    pts = eval_curve_many(curve, np.linspace(0.0, 1.0, s_p))
    return [Point2(float(u), float(v)) for u, v in pts]


def fit_points_at(lambdas: np.ndarray, points: np.ndarray, degree: int) -> tuple[PolyCurve, float]:
    """Least-squares fit of U and V against explicit parameter values.

    Returns the fitted curve and the combined residual norm
    sqrt(||U(lam) - u||^2 + ||V(lam) - v||^2).
    """
    if not 1 <= degree <= MAX_DEGREE:
        raise ParameterError(f"degree must lie in [1, {MAX_DEGREE}], got {degree}")
    lambdas = np.asarray(lambdas, dtype=float)
    points = np.asarray(points, dtype=float)
    if len(lambdas) < degree + 1:
        raise InsufficientPointsError(
            f"{len(lambdas)} points cannot determine a degree-{degree} curve"
        )
    design = np.vander(lambdas, degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(design, points, rcond=None)
    if rank < degree + 1:
        raise DegenerateFitError("rank-deficient design matrix (repeated lambda values)")
    residual = float(np.linalg.norm(design @ coeffs - points))
    return PolyCurve(tuple(coeffs[:, 0]), tuple(coeffs[:, 1])), residual


def fit_polyline(polyline: Polyline, degree: int = DEFAULT_DEGREE) -> tuple[PolyCurve, float]:
    """Independent ordinary-least-squares fits of U and V over chord lambda.

    The polyline must be canonically sorted (see sort_by_v).
    """
    lam = chord_lambda(polyline).as_array()
    return fit_points_at(lam, polyline.as_array(), degree)
