"""Row-detection metric suite: MPD, AP, TuSimple rates and ego-lane LPD.

All curve geometry is evaluated in normalized coordinates; pixels enter only
through the TuSimple deviation threshold, which is defined in pixel units of
the declared image size.  Per-image evaluations are independent and the
dataset-level numbers are order-independent reductions, so evaluation can be
distributed freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from .errors import MissingEgoBoundaryError, ParameterError
from .geometry import PolyCurve, Polyline, Prediction, eval_curve_many, fit_polyline

# Trapezoid grid for the squared-distance integral: lambda = 0, 0.01, ..., 1.
MPD_SAMPLES = 101
# Penalty per unmatched curve; the maximum attainable energy in the unit frame.
MPD_PENALTY = 2.0

LPD_SAMPLES = 100
# Predicted-boundary grid is a refinement of the target grid so identical
# curves measure exactly zero.
LPD_REFINE = 10
LPD_PENALTY = 2.0

DEFAULT_TAU_ACC = 20.0
DEFAULT_EPSILON = 0.85
DEFAULT_CONFIDENCE_THRESHOLD = 0.5

EGO_CENTER = 0.5


@dataclass(frozen=True)
class ImageEval:
    """Targets and predictions for one image, plus the pixel frame.

    Only predictions at or above the confidence threshold participate in any
    metric.  TuSimple additionally needs the original annotation polylines
    (normalized coordinates), carried in target_polylines parallel to targets.
    """

    targets: tuple[PolyCurve, ...]
    predictions: tuple[Prediction, ...]
    image_size: tuple[int, int]
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    target_polylines: tuple[Polyline, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "predictions", tuple(self.predictions))
        width, height = self.image_size
        if width <= 0 or height <= 0:
            raise ParameterError(f"image size must be positive, got {self.image_size}")
        if self.target_polylines is not None:
            object.__setattr__(self, "target_polylines", tuple(self.target_polylines))
            if len(self.target_polylines) != len(self.targets):
                raise ParameterError("target_polylines must parallel targets")

    @property
    def confident_predictions(self) -> tuple[Prediction, ...]:
        return tuple(p for p in self.predictions if p.confidence >= self.confidence_threshold)


def image_eval_from_rows(
    rows: list[Polyline],
    width: int,
    height: int,
    predictions: list[Prediction],
    degree: int = 2,
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> ImageEval:
    """Build an ImageEval by least-squares fitting each annotated row."""
    targets = tuple(fit_polyline(row, degree)[0] for row in rows)
    return ImageEval(
        targets=targets,
        predictions=tuple(predictions),
        image_size=(width, height),
        confidence_threshold=confidence_threshold,
        target_polylines=tuple(rows),
    )


@dataclass(frozen=True)
class MetricReport:
    """Flat metric record for one dataset run."""

    mpd: float
    ap: float
    tusimple_acc: float
    tusimple_fpr: float
    tusimple_fnr: float
    tusimple_f1: float
    lpd: float
    n_images: int
    n_targets: int
    n_predictions: int
    n_ego_skipped: int

    FIELDS = (
        "mpd", "ap", "tusimple_acc", "tusimple_fpr", "tusimple_fnr",
        "tusimple_f1", "lpd", "n_images", "n_targets", "n_predictions",
        "n_ego_skipped",
    )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.FIELDS)

    def to_csv_line(self) -> str:
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in
                        (getattr(self, name) for name in self.FIELDS))


def f1_score(fpr: float, fnr: float) -> float:
    """F1 from the precision/recall identity; 0 when the denominator is 0."""
    precision = 1.0 - fpr
    recall = 1.0 - fnr
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# Mean Poly Distance
# ---------------------------------------------------------------------------

def mpd_pair_cost(pred: PolyCurve, target: PolyCurve) -> float:
    """Trapezoidal integral of squared curve distance on the 101-point grid."""
    lam = np.linspace(0.0, 1.0, MPD_SAMPLES)
    diff = eval_curve_many(target, lam) - eval_curve_many(pred, lam)
    d2 = (diff * diff).sum(axis=1)
    dx = 1.0 / (MPD_SAMPLES - 1)
    return float((0.5 * (d2[0] + d2[-1]) + d2[1:-1].sum()) * dx)


def _greedy_pairs(costs: np.ndarray) -> list[tuple[int, int]]:
    """Globally greedy one-to-one matching, ascending by pair cost."""
    order = sorted(
        ((float(costs[i, j]), i, j) for i in range(costs.shape[0]) for j in range(costs.shape[1]))
    )
    used_t: set[int] = set()
    used_p: set[int] = set()
    pairs = []
    for _, i, j in order:
        if i in used_t or j in used_p:
            continue
        pairs.append((i, j))
        used_t.add(i)
        used_p.add(j)
    return pairs


def mean_poly_distance(image: ImageEval, use_hungarian: bool = False) -> float:
    """Per-image MPD: matched-pair integrals plus a fixed penalty of 2 for
    every unmatched prediction (false positive) and target (false negative).

    Matching is globally greedy by ascending pair cost; set use_hungarian for
    the optimal-assignment variant.
    """
    targets = image.targets
    preds = [p.curve for p in image.confident_predictions]
    if not targets and not preds:
        return 0.0
    if not targets or not preds:
        return MPD_PENALTY * (len(targets) + len(preds))
    costs = np.array([[mpd_pair_cost(p, t) for p in preds] for t in targets])
    if use_hungarian:
        rows, cols = linear_sum_assignment(costs)
        pairs = list(zip(rows.tolist(), cols.tolist()))
    else:
        pairs = _greedy_pairs(costs)
    matched = sum(float(costs[i, j]) for i, j in pairs)
    unmatched = (len(targets) - len(pairs)) + (len(preds) - len(pairs))
    return matched + MPD_PENALTY * unmatched


# ---------------------------------------------------------------------------
# TuSimple metrics
# ---------------------------------------------------------------------------

def _real_roots_in_unit(coeffs: np.ndarray) -> np.ndarray:
    """Real roots of a polynomial inside [0, 1], inclusive with slack."""
    trimmed = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if len(trimmed) <= 1:
        return np.empty(0)
    roots = P.polyroots(trimmed)
    real = roots[np.abs(roots.imag) < 1e-9].real
    real = real[(real > -1e-9) & (real < 1.0 + 1e-9)]
    return np.clip(real, 0.0, 1.0)


def x_at_y(curve: PolyCurve, v_query: float) -> float | None:
    """Solve V(lambda) = v_query on [0, 1] and return U at that root.

    With a non-monotone V the root with the largest |V'| magnitude wins; if no
    root lies in [0, 1] the query is unanswerable and None is returned.
    """
    v_coeffs = curve.v_array()
    shifted = v_coeffs.copy()
    shifted[0] -= v_query
    roots = _real_roots_in_unit(shifted)
    if len(roots) == 0:
        return None
    slope = np.abs(P.polyval(roots, P.polyder(v_coeffs)))
    lam = float(roots[int(np.argmax(slope))])
    return float(P.polyval(lam, curve.u_array()))


def _row_accuracy(pred: PolyCurve, polyline: Polyline, width: int,
                  tau_acc: float) -> tuple[int, int]:
    """(hit count, point count) of one prediction against one annotated row."""
    hits = 0
    for point in polyline.points:
        x_pred = x_at_y(pred, point.v)
        if x_pred is None:
            continue  # unresolvable query point counts as a miss
        if abs(x_pred * width - point.u * width) < tau_acc:
            hits += 1
    return hits, len(polyline.points)


@dataclass
class _TuSimpleCounts:
    tp: int = 0
    n_targets: int = 0
    n_predictions: int = 0
    correct_points: int = 0
    total_points: int = 0

    @property
    def fp(self) -> int:
        return self.n_predictions - self.tp

    @property
    def fn(self) -> int:
        return self.n_targets - self.tp


def _tusimple_image(image: ImageEval, tau_acc: float, epsilon: float) -> _TuSimpleCounts:
    if image.target_polylines is None:
        raise ParameterError("TuSimple metrics need annotation points on targets")
    width, height = image.image_size
    preds = [p.curve for p in image.confident_predictions]
    polylines = image.target_polylines
    counts = _TuSimpleCounts(n_targets=len(polylines), n_predictions=len(preds))
    counts.total_points = sum(len(pl.points) for pl in polylines)
    if not preds or not polylines:
        return counts

    acc = np.zeros((len(polylines), len(preds)))
    hits = np.zeros((len(polylines), len(preds)), dtype=int)
    for i, polyline in enumerate(polylines):
        for j, pred in enumerate(preds):
            h, total = _row_accuracy(pred, polyline, width, height, tau_acc)
            hits[i, j] = h
            acc[i, j] = h / total if total else 0.0

    # Pair each prediction to the target maximizing its accuracy, one-to-one,
    # descending; deterministic tie-break on (target, prediction) index.
    order = sorted(
        ((-acc[i, j], i, j) for i in range(acc.shape[0]) for j in range(acc.shape[1]))
    )
    used_t: set[int] = set()
    used_p: set[int] = set()
    for neg_acc, i, j in order:
        if i in used_t or j in used_p:
            continue
        used_t.add(i)
        used_p.add(j)
        counts.correct_points += int(hits[i, j])
        if -neg_acc >= epsilon:
            counts.tp += 1
    return counts


def tusimple(
    eval_set: list[ImageEval],
    tau_acc: float = DEFAULT_TAU_ACC,
    epsilon: float = DEFAULT_EPSILON,
    pooled: bool = False,
) -> tuple[float, float, float, float]:
    """(accuracy, FPR, FNR, F1) over a dataset.

    Per-image rates are averaged across images by default; the pooled flag
    instead accumulates raw counts over the whole set before dividing.
    """
    per_image = [_tusimple_image(image, tau_acc, epsilon) for image in eval_set]
    if not per_image:
        return 0.0, 0.0, 0.0, 0.0
    if pooled:
        n_preds = sum(c.n_predictions for c in per_image)
        n_targets = sum(c.n_targets for c in per_image)
        total_points = sum(c.total_points for c in per_image)
        acc = sum(c.correct_points for c in per_image) / total_points if total_points else 0.0
        fpr = sum(c.fp for c in per_image) / n_preds if n_preds else 0.0
        fnr = sum(c.fn for c in per_image) / n_targets if n_targets else 0.0
    else:
        accs = [c.correct_points / c.total_points for c in per_image if c.total_points]
        acc = float(np.mean(accs)) if accs else 0.0
        fprs = [c.fp / c.n_predictions for c in per_image if c.n_predictions]
        fpr = float(np.mean(fprs)) if fprs else 0.0
        fnrs = [c.fn / c.n_targets for c in per_image if c.n_targets]
        fnr = float(np.mean(fnrs)) if fnrs else 0.0
    return acc, fpr, fnr, f1_score(fpr, fnr)


def accuracy_percent(
    eval_set: list[ImageEval],
    tau_acc: float = DEFAULT_TAU_ACC,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Correct predictions over total predictions, pooled across the set.

    A prediction is correct when it is a TuSimple true positive: paired to a
    target with per-row point accuracy >= epsilon.  0 when no predictions.
    """
    counts = [_tusimple_image(image, tau_acc, epsilon) for image in eval_set]
    total = sum(c.n_predictions for c in counts)
    if total == 0:
        return 0.0
    return sum(c.tp for c in counts) / total


# ---------------------------------------------------------------------------
# Ego lane and LPD
# ---------------------------------------------------------------------------

def bottom_u(curve: PolyCurve) -> float:
    """U at the lambda whose V is maximal over [0, 1] (closest to camera)."""
    v_coeffs = curve.v_array()
    candidates = [0.0, 1.0]
    if len(v_coeffs) > 1:
        candidates.extend(float(r) for r in _real_roots_in_unit_open(P.polyder(v_coeffs)))
    vs = [float(P.polyval(lam, v_coeffs)) for lam in candidates]
    lam_star = candidates[int(np.argmax(vs))]
    return float(P.polyval(lam_star, curve.u_array()))


def _real_roots_in_unit_open(coeffs: np.ndarray) -> np.ndarray:
    trimmed = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if len(trimmed) <= 1:
        return np.empty(0)
    roots = P.polyroots(trimmed)
    real = roots[np.abs(roots.imag) < 1e-9].real
    return real[(real > 0.0) & (real < 1.0)]


def _ego_split(curves) -> tuple[int | None, int | None]:
    """Indices of the ego boundaries: left = largest bottom-u below center,
    right = smallest bottom-u at or above center."""
    left = None
    right = None
    left_u = -math.inf
    right_u = math.inf
    for idx, curve in enumerate(curves):
        u = bottom_u(curve)
        if u < EGO_CENTER:
            if u > left_u:
                left_u, left = u, idx
        elif u < right_u:
            right_u, right = u, idx
    return left, right


def ego_lane(image: ImageEval) -> tuple[PolyCurve, PolyCurve]:
    """The target rows bounding the lane the robot occupies."""
    if len(image.targets) < 2:
        raise MissingEgoBoundaryError(f"need >= 2 rows, got {len(image.targets)}")
    left, right = _ego_split(image.targets)
    if left is None:
        raise MissingEgoBoundaryError("no row left of image center")
    if right is None:
        raise MissingEgoBoundaryError("no row right of image center")
    return image.targets[left], image.targets[right]


def _boundary_deviation(target: PolyCurve, pred: PolyCurve) -> float:
    """Camera-proximity-weighted mean distance from target samples to the
    nearest point of the predicted boundary."""
    lam = np.linspace(0.0, 1.0, LPD_SAMPLES)
    samples = eval_curve_many(target, lam)
    dense_n = (LPD_SAMPLES - 1) * LPD_REFINE + 1
    dense = eval_curve_many(pred, np.linspace(0.0, 1.0, dense_n))
    diff = samples[:, None, :] - dense[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2)).min(axis=1)
    weights = samples[:, 1]
    denom = weights.sum()
    if denom <= 0.0:
        return float(dist.mean())
    return float((weights * dist).sum() / denom)


def lane_position_deviation_image(image: ImageEval) -> float:
    """Per-image LPD; raises MissingEgoBoundaryError when the target ego lane
    cannot be resolved (callers skip and count such images)."""
    target_left, target_right = ego_lane(image)
    pred_curves = [p.curve for p in image.confident_predictions]
    pred_left_idx, pred_right_idx = _ego_split(pred_curves)
    deviations = []
    for target, pred_idx in ((target_left, pred_left_idx), (target_right, pred_right_idx)):
        if pred_idx is None:
            deviations.append(LPD_PENALTY)
        else:
            deviations.append(_boundary_deviation(target, pred_curves[pred_idx]))
    return float(np.mean(deviations))


def lane_position_deviation(eval_set: list[ImageEval]) -> tuple[float, int]:
    """(mean LPD over resolvable images, count of skipped images)."""
    values = []
    skipped = 0
    for image in eval_set:
        try:
            values.append(lane_position_deviation_image(image))
        except MissingEgoBoundaryError:
            skipped += 1
    return (float(np.mean(values)) if values else 0.0), skipped


# ---------------------------------------------------------------------------
# Dataset-level report
# ---------------------------------------------------------------------------

def evaluate(
    eval_set: list[ImageEval],
    tau_acc: float = DEFAULT_TAU_ACC,
    epsilon: float = DEFAULT_EPSILON,
    pooled: bool = False,
    mpd_use_hungarian: bool = False,
) -> MetricReport:
    """Run the full metric suite over a set of per-image evaluations."""
    n_images = len(eval_set)
    mpd = (
        float(np.mean([mean_poly_distance(img, use_hungarian=mpd_use_hungarian)
                       for img in eval_set]))
        if eval_set else 0.0
    )
    acc, fpr, fnr, f1 = tusimple(eval_set, tau_acc=tau_acc, epsilon=epsilon, pooled=pooled)
    ap = accuracy_percent(eval_set, tau_acc=tau_acc, epsilon=epsilon)
    lpd, skipped = lane_position_deviation(eval_set)
    return MetricReport(
        mpd=mpd,
        ap=ap,
        tusimple_acc=acc,
        tusimple_fpr=fpr,
        tusimple_fnr=fnr,
        tusimple_f1=f1,
        lpd=lpd,
        n_images=n_images,
        n_targets=sum(len(img.targets) for img in eval_set),
        n_predictions=sum(len(img.confident_predictions) for img in eval_set),
        n_ego_skipped=skipped,
    )
