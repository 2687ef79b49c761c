"""One-to-one assignment of target rows to predicted rows.

Given N targets and M >= N predictions, the matcher picks the injective map
of targets into predictions minimizing the summed pair cost.  Totals are
accumulated with math.fsum, so a total is a function of the pair set alone
and the exhaustive oracle and the Hungarian path agree bit-for-bit.  Ties
between equally cheap assignments are broken toward the lexicographically
smallest pair list, which keeps runs reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InsufficientPredictionsError, OracleSizeError, ParameterError
from .geometry import PolyCurve, Prediction
from .loss import cls_loss, poly_opt_loss

BRUTE_FORCE_MAX_TARGETS = 7
BRUTE_FORCE_MAX_ASSIGNMENTS = 2_000_000


@dataclass(frozen=True)
class CostMatrix:
    """Pair costs with targets as rows and predictions as columns (N <= M)."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2:
            raise ParameterError("cost matrix must be two-dimensional")
        n, m = entries.shape
        if n < 1:
            raise ParameterError("cost matrix needs at least one target row")
        if m < n:
            raise InsufficientPredictionsError(f"{m} predictions for {n} targets")
        if not np.all(np.isfinite(entries)):
            raise ParameterError("cost matrix entries must be finite")
        if np.any(entries < 0.0):
            raise ParameterError("cost matrix entries must be non-negative")
        entries = entries.copy()
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def n_targets(self) -> int:
        return self.entries.shape[0]

    @property
    def n_predictions(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class Assignment:
    """An injective target -> prediction map with its summed cost."""

    pairs: tuple[tuple[int, int], ...]
    total_cost: float
    unmatched_predictions: frozenset[int]


def _total(entries: np.ndarray, cols) -> float:
    # fsum is correctly rounded, so the value does not depend on pair order.
    return math.fsum(float(entries[i, j]) for i, j in enumerate(cols))


def _as_assignment(entries: np.ndarray, cols) -> Assignment:
    pairs = tuple((i, int(j)) for i, j in enumerate(cols))
    used = {j for _, j in pairs}
    unmatched = frozenset(j for j in range(entries.shape[1]) if j not in used)
    return Assignment(pairs, _total(entries, cols), unmatched)


def build_cost_matrix(
    targets: list[PolyCurve],
    preds: list[Prediction],
    include_cls: bool = True,
) -> CostMatrix:
    """entry[i][j] = geometric loss of (pred j, target i) plus, by default,
    the matched-classification cost -log(confidence_j)."""
    if len(targets) < 1:
        raise ParameterError("need at least one target")
    if len(preds) < len(targets):
        raise InsufficientPredictionsError(
            f"{len(preds)} predictions for {len(targets)} targets"
        )
    entries = np.empty((len(targets), len(preds)))
    cls_col = [cls_loss(p.confidence, True) if include_cls else 0.0 for p in preds]
    for i, target in enumerate(targets):
        for j, pred in enumerate(preds):
            entries[i, j] = poly_opt_loss(pred.curve, target) + cls_col[j]
    return CostMatrix(entries)


def assign_min_cost(entries: np.ndarray) -> np.ndarray:
    """Columns of one optimal assignment, indexed by row (no tie-break contract).

    Thin wrapper over scipy's Hungarian solver; the fast path for callers that
    re-match every optimization step and never see exact cost ties.
    """
    rows, cols = linear_sum_assignment(entries)
    order = np.argsort(rows)
    return cols[order]


def hungarian(costs: CostMatrix) -> Assignment:
    """Minimum-cost assignment with deterministic lexicographic tie-break.

    Starts from an optimal solution and then, target by target, fixes the
    smallest prediction index that still completes to the optimal total, so
    the returned pair list is the lexicographically smallest minimizer.
    """
    entries = costs.entries
    n, m = entries.shape
    best = [int(c) for c in assign_min_cost(entries)]
    best_total = _total(entries, best)

    available = set(range(m))
    for i in range(n):
        for j in sorted(available):
            if j >= best[i]:
                break
            rest_rows = list(range(i + 1, n))
            rest_cols = sorted(available - {j})
            completion: list[int] = []
            if rest_rows:
                sub = entries[np.ix_(rest_rows, rest_cols)]
                completion = [rest_cols[c] for c in assign_min_cost(sub)]
            candidate = best[:i] + [j] + completion
            candidate_total = _total(entries, candidate)
            if candidate_total <= best_total:
                best = candidate
                best_total = candidate_total
                break
        available.discard(best[i])
    return _as_assignment(entries, best)


def brute_force_match(costs: CostMatrix) -> Assignment:
    """Exhaustive minimum over all injective assignments (test oracle).

    Enumerates prediction tuples in lexicographic order and keeps the first
    minimum, matching hungarian's tie-break by construction.
    """
    entries = costs.entries
    n, m = entries.shape
    if n > BRUTE_FORCE_MAX_TARGETS:
        raise OracleSizeError(f"{n} targets exceed the oracle bound {BRUTE_FORCE_MAX_TARGETS}")
    count = math.perm(m, n)
    if count > BRUTE_FORCE_MAX_ASSIGNMENTS:
        raise OracleSizeError(f"{count} assignments exceed the enumeration bound")

    perms = np.array(list(permutations(range(m), n)), dtype=int)
    totals = entries[np.arange(n)[None, :], perms].sum(axis=1)
    # Preselect near-minimal tuples with a generous margin, then settle the
    # winner with exact (fsum) totals in lexicographic order.
    near = np.nonzero(totals <= totals.min() + 1e-9)[0]
    best_cols: list[int] | None = None
    best_total = math.inf
    for idx in near:
        cols = [int(c) for c in perms[idx]]
        total = _total(entries, cols)
        if total < best_total:
            best_total = total
            best_cols = cols
    assert best_cols is not None
    return _as_assignment(entries, best_cols)
