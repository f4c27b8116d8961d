import itertools

import numpy as np
import pytest

from dropkit.assignment import FORBIDDEN, Assignment, CostMatrix, solve
from helpers import brute_force_assignment


class TestCostMatrix:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            CostMatrix(np.array([[0.0, float("nan")]]))

    def test_rejects_neg_inf(self):
        with pytest.raises(ValueError):
            CostMatrix(np.array([[-float("inf")]]))

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            CostMatrix(np.zeros(3))

    def test_forbidden_is_positive_infinity(self):
        assert FORBIDDEN == float("inf")


class TestSolveBasics:
    def test_zero_cost_diagonal(self):
        a = solve(CostMatrix(np.array([[0.0, 1.0], [1.0, 0.0]])))
        assert a.pairs == ((0, 0), (1, 1))
        assert a.total_cost == 0.0
        assert a.unmatched_rows == () and a.unmatched_cols == ()

    def test_empty_matrix(self):
        a = solve(CostMatrix(np.zeros((0, 3))))
        assert a.pairs == ()
        assert a.unmatched_cols == (0, 1, 2)
        a = solve(CostMatrix(np.zeros((2, 0))))
        assert a.unmatched_rows == (0, 1)

    def test_seeded_3x3_matches_brute_force(self):
        rng = np.random.default_rng(1234)
        costs = rng.integers(0, 100, size=(3, 3)).astype(float)
        a = solve(CostMatrix(costs))
        card, cost, pairs = brute_force_assignment(costs)
        assert len(a.pairs) == card == 3
        assert a.total_cost == cost
        assert a.pairs == pairs

    def test_rectangular_2x3(self):
        rng = np.random.default_rng(99)
        costs = rng.integers(0, 50, size=(2, 3)).astype(float)
        a = solve(CostMatrix(costs))
        card, cost, pairs = brute_force_assignment(costs)
        assert len(a.pairs) == 2 and len(a.unmatched_cols) == 1
        assert a.total_cost == cost and a.pairs == pairs

    def test_fully_forbidden(self):
        a = solve(CostMatrix(np.full((3, 3), FORBIDDEN)))
        assert a.pairs == ()
        assert a.unmatched_rows == (0, 1, 2)

    def test_forbidden_never_selected(self):
        costs = np.array([[FORBIDDEN, 5.0], [FORBIDDEN, FORBIDDEN]])
        a = solve(CostMatrix(costs))
        assert a.pairs == ((0, 1),)
        assert 0 in a.unmatched_cols and 1 in a.unmatched_rows

    def test_prefers_cardinality_over_cost(self):
        # matching both rows costs 100, matching one row would cost 1
        costs = np.array([[1.0, FORBIDDEN], [50.0, 50.0]])
        a = solve(CostMatrix(costs))
        assert len(a.pairs) == 2
        assert a.pairs == ((0, 0), (1, 1))


class TestSolveAgainstBruteForce:
    def test_exhaustive_small_matrices(self):
        rng = np.random.default_rng(2024)
        for _ in range(400):
            rows = int(rng.integers(0, 8))
            cols = int(rng.integers(0, 8))
            costs = rng.integers(0, 40, size=(rows, cols)).astype(float)
            costs[rng.random((rows, cols)) < 0.3] = FORBIDDEN
            a = solve(CostMatrix(costs))
            card, cost, pairs = brute_force_assignment(costs)
            assert len(a.pairs) == card
            assert a.total_cost == cost
            assert a.pairs == pairs

    def test_heavy_ties_still_lexicographic(self):
        rng = np.random.default_rng(77)
        for _ in range(300):
            rows = int(rng.integers(1, 6))
            cols = int(rng.integers(1, 6))
            costs = rng.integers(0, 3, size=(rows, cols)).astype(float)
            costs[rng.random((rows, cols)) < 0.3] = FORBIDDEN
            a = solve(CostMatrix(costs))
            card, cost, pairs = brute_force_assignment(costs)
            assert (len(a.pairs), a.total_cost, a.pairs) == (card, cost, pairs)

    def test_negative_costs(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            costs = rng.integers(-30, 10, size=(4, 4)).astype(float)
            costs[rng.random((4, 4)) < 0.2] = FORBIDDEN
            a = solve(CostMatrix(costs))
            card, cost, pairs = brute_force_assignment(costs)
            assert (len(a.pairs), a.total_cost, a.pairs) == (card, cost, pairs)


class TestSolveProperties:
    def test_constant_shift_keeps_pairs(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            costs = rng.integers(0, 60, size=(5, 5)).astype(float)
            base = solve(CostMatrix(costs)).pairs
            shifted = solve(CostMatrix(costs + 17.0)).pairs
            assert base == shifted

    def test_row_permutation_same_total(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            costs = rng.integers(0, 60, size=(5, 6)).astype(float)
            perm = rng.permutation(5)
            a = solve(CostMatrix(costs))
            b = solve(CostMatrix(costs[perm]))
            assert a.total_cost == b.total_cost

    def test_full_cardinality_without_forbidden(self):
        rng = np.random.default_rng(13)
        for rows, cols in [(3, 7), (7, 3), (5, 5), (1, 1)]:
            costs = rng.uniform(0, 1, size=(rows, cols))
            a = solve(CostMatrix(costs))
            assert len(a.pairs) == min(rows, cols)

    def test_partition_covers_everything_once(self):
        rng = np.random.default_rng(14)
        costs = rng.uniform(0, 1, size=(6, 4))
        costs[rng.random((6, 4)) < 0.4] = FORBIDDEN
        a = solve(CostMatrix(costs))
        rows = sorted([r for r, _ in a.pairs] + list(a.unmatched_rows))
        cols = sorted([c for _, c in a.pairs] + list(a.unmatched_cols))
        assert rows == list(range(6))
        assert cols == list(range(4))

    def test_deterministic_across_runs(self):
        costs = np.array([[1.0, 1.0, 2.0], [1.0, 1.0, 2.0], [2.0, 2.0, 1.0]])
        results = {solve(CostMatrix(costs)).pairs for _ in range(20)}
        assert results == {((0, 0), (1, 1), (2, 2))}

    def test_assignment_type(self):
        a = solve(CostMatrix(np.array([[0.5]])))
        assert isinstance(a, Assignment)
        assert a.pairs == ((0, 0),)
