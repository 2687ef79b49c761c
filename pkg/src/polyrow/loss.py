"""Curve-alignment energy loss, its gradient, and companion losses.

The geometric distance between two parametric curves C and C-hat is
D(lambda)^2 = (U - U-hat)^2 + (V - V-hat)^2.  Because both axes are
polynomials, the integral of D^2 over [0, 1] collapses to an exact quadratic
form E^T A E per axis, where E is the coefficient difference and
A[i][j] = integral of lambda^(i+j) = 1/(i+j+1).  No numerical integration is
involved, and the gradient is closed-form as well, which makes the loss cheap
enough to evaluate inside a matching loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError
from .geometry import LambdaParam, PolyCurve, Polyline, Prediction, eval_curve_many

MAX_HILBERT_DIM = 6

# Confidence clamp keeping binary cross-entropy finite.
CONFIDENCE_EPS = 1e-7


@lru_cache(maxsize=None)
def hilbert_matrix(dim: int) -> np.ndarray:
    """The (dim x dim) integration matrix A[i][j] = 1/(i+j+1).

    Equal to the Gram matrix of the monomials 1, lambda, ..., lambda^(dim-1)
    on [0, 1]; symmetric positive definite.  Cached and returned read-only.
    """
    if not 1 <= dim <= MAX_HILBERT_DIM:
        raise ParameterError(f"integration matrix dim must lie in [1, {MAX_HILBERT_DIM}], got {dim}")
    idx = np.arange(dim)
    mat = 1.0 / (idx[:, None] + idx[None, :] + 1.0)
    mat.flags.writeable = False
    return mat


def coefficient_errors(pred: PolyCurve, target: PolyCurve) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis coefficient differences, zero-padded to a common degree."""
    width = max(len(pred.u_coeffs), len(target.u_coeffs))
    e_u = np.zeros(width)
    e_v = np.zeros(width)
    e_u[: len(pred.u_coeffs)] = pred.u_coeffs
    e_v[: len(pred.v_coeffs)] = pred.v_coeffs
    e_u[: len(target.u_coeffs)] -= target.u_coeffs
    e_v[: len(target.v_coeffs)] -= target.v_coeffs
    return e_u, e_v


def poly_opt_loss(pred: PolyCurve, target: PolyCurve) -> float:
    """Integral of squared curve distance, evaluated as a quadratic form.

    Symmetric in (pred, target); zero exactly when the coefficient vectors
    coincide.
    """
    e_u, e_v = coefficient_errors(pred, target)
    a = hilbert_matrix(len(e_u))
    return float(e_u @ a @ e_u + e_v @ a @ e_v)


def poly_opt_loss_grad(pred: PolyCurve, target: PolyCurve) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of poly_opt_loss with respect to pred's coefficients.

    d/dE of E^T A E is 2 A E per axis (A symmetric).
    """
    e_u, e_v = coefficient_errors(pred, target)
    a = hilbert_matrix(len(e_u))
    return 2.0 * (a @ e_u), 2.0 * (a @ e_v)


def regression_loss(pred: PolyCurve, target, lambdas) -> float:
    """Root-mean-square point distance between the curve and annotated points.

    The curve is evaluated at the given parameter values (normally the
    polyline's own chord lambda), so each annotation point is compared
    against its assigned curve location.  Accepts a Polyline / LambdaParam
    pair or bare arrays, which allows degenerate cases like a single point.
    """
    pts = target.as_array() if isinstance(target, Polyline) else np.atleast_2d(np.asarray(target, dtype=float))
    lam = lambdas.as_array() if isinstance(lambdas, LambdaParam) else np.atleast_1d(np.asarray(lambdas, dtype=float))
    if pts.size == 0:
        raise ParameterError("regression loss needs a non-empty polyline")
    if len(lam) != len(pts):
        raise ParameterError(f"lambda count {len(lam)} does not match point count {len(pts)}")
    curve_pts = eval_curve_many(pred, lam)
    sq = ((curve_pts - pts) ** 2).sum(axis=1)
    return float(math.sqrt(sq.mean()))


def cls_loss(confidence: float, is_match: bool) -> float:
    """Binary cross-entropy of a row-existence score, clamped for finiteness."""
    c = min(max(float(confidence), CONFIDENCE_EPS), 1.0 - CONFIDENCE_EPS)
    return -math.log(c) if is_match else -math.log(1.0 - c)


@dataclass(frozen=True)
class PairLoss:
    """Per-pair loss decomposition: geometric energy + classification."""

    poly: float
    cls: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.poly) and math.isfinite(self.cls)):
            raise ParameterError("loss components must be finite")
        if self.poly < 0.0 or self.cls < 0.0:
            raise ParameterError("loss components must be non-negative")

    @property
    def total(self) -> float:
        return self.poly + self.cls


def pair_cost(pred: Prediction, target: PolyCurve, is_match: bool = True) -> PairLoss:
    """Combined matching cost of one (prediction, target) pair."""
    return PairLoss(
        poly=poly_opt_loss(pred.curve, target),
        cls=cls_loss(pred.confidence, is_match),
    )
