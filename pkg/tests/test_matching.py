import math

import numpy as np
import pytest

from polyrow.errors import InsufficientPredictionsError, OracleSizeError, ParameterError
from polyrow.geometry import PolyCurve, Prediction
from polyrow.matching import (
    Assignment,
    CostMatrix,
    assign_min_cost,
    brute_force_match,
    build_cost_matrix,
    hungarian,
)

LN2 = math.log(2)


def cm(rows):
    return CostMatrix(np.array(rows, dtype=float))


class TestCostMatrix:
    def test_more_targets_than_predictions_rejected(self):
        with pytest.raises(InsufficientPredictionsError):
            cm([[1.0], [2.0]])

    def test_nonfinite_rejected(self):
        with pytest.raises(ParameterError):
            cm([[1.0, math.inf]])

    def test_negative_rejected(self):
        with pytest.raises(ParameterError):
            cm([[1.0, -0.5]])

    def test_entries_read_only(self):
        matrix = cm([[1.0, 2.0]])
        with pytest.raises(ValueError):
            matrix.entries[0, 0] = 0.0


class TestBuildCostMatrix:
    def test_single_pair_half_confidence(self):
        c = PolyCurve((0.5, 0.1, 0.0), (0, 1, 0))
        out = build_cost_matrix([c], [Prediction(c, 0.5)])
        assert out.entries[0, 0] == pytest.approx(LN2, abs=1e-12)

    def test_identical_rows_constant_matrix(self):
        c = PolyCurve((0.5, 0.1, 0.0), (0, 1, 0))
        preds = [Prediction(c, 0.7), Prediction(c, 0.7)]
        out = build_cost_matrix([c, c], preds)
        assert np.ptp(out.entries) == 0.0

    def test_cross_combinations(self):
        zero = PolyCurve((0.0,), (0.0,))
        one = PolyCurve((1.0,), (0.0,))
        targets = [zero, one]
        preds = [Prediction(zero, 0.5), Prediction(one, 0.5)]
        out = build_cost_matrix(targets, preds)
        expected = np.array([[LN2, 1 + LN2], [1 + LN2, LN2]])
        np.testing.assert_allclose(out.entries, expected, atol=1e-12)

    def test_exclude_cls_flag(self):
        zero = PolyCurve((0.0,), (0.0,))
        one = PolyCurve((1.0,), (0.0,))
        out = build_cost_matrix([zero], [Prediction(one, 0.5)], include_cls=False)
        assert out.entries[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_insufficient_predictions(self):
        c = PolyCurve((0.5,), (0, 1))
        with pytest.raises(InsufficientPredictionsError):
            build_cost_matrix([c, c], [Prediction(c, 0.5)])


class TestHungarian:
    def test_two_by_two(self):
        out = hungarian(cm([[1, 2], [3, 1]]))
        assert out.pairs == ((0, 0), (1, 1))
        assert out.total_cost == 2.0
        assert out.unmatched_predictions == frozenset()

    def test_single_cell(self):
        out = hungarian(cm([[5.0]]))
        assert out.pairs == ((0, 0),)
        assert out.total_cost == 5.0

    def test_all_equal_tie_break(self):
        out = hungarian(cm([[1, 1], [1, 1]]))
        assert out.pairs == ((0, 0), (1, 1))
        assert out.total_cost == 2.0

    def test_multi_way_tie_break(self):
        # Several zero-cost assignments; lexicographic smallest must win.
        out = hungarian(cm([[0, 0, 5], [5, 0, 0]]))
        assert out.pairs == ((0, 0), (1, 1))
        assert out.unmatched_predictions == frozenset({2})

    def test_rectangular_unmatched(self):
        out = hungarian(cm([[9, 1, 5, 7]]))
        assert out.pairs == ((0, 1),)
        assert out.unmatched_predictions == frozenset({0, 2, 3})


class TestBruteForce:
    def test_matches_examples(self):
        out = brute_force_match(cm([[1, 2], [3, 1]]))
        assert out.pairs == ((0, 0), (1, 1))
        assert out.total_cost == 2.0

    def test_oracle_size_bound(self):
        with pytest.raises(OracleSizeError):
            brute_force_match(CostMatrix(np.ones((8, 9))))

    def test_random_equivalence_with_hungarian(self):
        rng = np.random.default_rng(12)
        for _ in range(150):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(n, 9))
            matrix = CostMatrix(rng.uniform(0, 10, size=(n, m)))
            ours = hungarian(matrix)
            oracle = brute_force_match(matrix)
            assert ours.pairs == oracle.pairs
            assert ours.total_cost == oracle.total_cost
            assert ours.unmatched_predictions == oracle.unmatched_predictions

    def test_tied_matrix_equivalence(self):
        for rows in ([[1, 1], [1, 1]], [[0, 0, 5], [5, 0, 0]], [[2, 2, 2]]):
            matrix = cm(rows)
            assert hungarian(matrix).pairs == brute_force_match(matrix).pairs


class TestAssignmentProperties:
    def test_permutation_equivariance(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            n, m = 4, 6
            entries = rng.uniform(0, 5, size=(n, m))
            base = hungarian(CostMatrix(entries))
            perm = rng.permutation(n)
            permuted = hungarian(CostMatrix(entries[perm]))
            # Row i of the permuted problem is row perm[i] of the original.
            remapped = sorted((int(perm[i]), j) for i, j in permuted.pairs)
            assert remapped == sorted(base.pairs)
            assert permuted.total_cost == pytest.approx(base.total_cost, abs=1e-12)

    def test_row_shift_leaves_argmin(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            entries = rng.uniform(0, 5, size=(3, 5))
            base = hungarian(CostMatrix(entries))
            shifted = entries.copy()
            shifted[1] += 2.5
            out = hungarian(CostMatrix(shifted))
            assert out.pairs == base.pairs

    def test_no_improving_two_swap(self):
        rng = np.random.default_rng(15)
        for _ in range(50):
            entries = rng.uniform(0, 5, size=(5, 7))
            out = hungarian(CostMatrix(entries))
            cols = dict(out.pairs)
            for i in range(5):
                for j in range(i + 1, 5):
                    current = entries[i, cols[i]] + entries[j, cols[j]]
                    swapped = entries[i, cols[j]] + entries[j, cols[i]]
                    assert current <= swapped + 1e-12

    def test_fast_path_total_matches(self):
        rng = np.random.default_rng(16)
        entries = rng.uniform(0, 5, size=(4, 6))
        cols = assign_min_cost(entries)
        total = math.fsum(entries[i, c] for i, c in enumerate(cols))
        assert total == hungarian(CostMatrix(entries)).total_cost
