import numpy as np
import pytest

from src.core.costs import (CostFunction, CostKind, cost_cminsum, cost_combined, cost_constrained,
                            cost_minmax)
from src.core.errors import ParameterError


def test_minmax():
    assert cost_minmax([30, 50, 40]) == 50
    assert cost_minmax([7]) == 7
    assert cost_minmax([25, 25, 25, 25]) == 25


def test_minmax_rejects_empty():
    with pytest.raises(ParameterError):
        cost_minmax([])


def test_constrained_branches():
    assert cost_constrained(90, 100) == 90
    assert cost_constrained(110, 100, 1000) == 10110
    assert cost_constrained(100, 100) == 100


def test_cminsum():
    assert cost_cminsum([30, 50, 40], 100) == 120
    assert cost_cminsum([110, 50], 100, 1000) == 10160
    assert cost_cminsum([0, 0, 0], 100) == 0


def test_cminsum_per_tour_budgets():
    assert cost_cminsum([30, 30], [40, 20], 10) == 30 + 30 + 10 * 10


def test_combined():
    assert cost_combined([30, 50, 40], 100) == pytest.approx(120 + 50 / 3)
    assert cost_combined([80], 100, n_t=1) == 160
    assert cost_combined([110, 50], 100, 1000, n_t=2) == 10215


def test_combined_rejects_wrong_tour_count():
    with pytest.raises(ParameterError):
        cost_combined([1, 2], 100, n_t=3)


def test_random_identities():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        costs = rng.uniform(0, 150, size=rng.integers(1, 8)).tolist()
        c_max, k_c = 100.0, 1000.0
        assert cost_combined(costs, c_max, k_c) == cost_cminsum(costs, c_max, k_c) + cost_minmax(costs) / len(costs)
        penalized = cost_cminsum(costs, c_max, k_c) != sum(costs)
        assert penalized == any(c > c_max for c in costs)


def test_cost_functions_are_monotone():
    rng = np.random.default_rng(1)
    for kind in CostKind:
        fn = CostFunction(kind, 100.0)
        for _ in range(200):
            costs = rng.uniform(0, 130, size=4)
            bumped = costs.copy()
            bumped[rng.integers(4)] += rng.uniform(0, 10)
            assert fn(bumped.tolist()) >= fn(costs.tolist())


def test_replacing_matches_direct_evaluation():
    rng = np.random.default_rng(2)
    costs = [40.0, 95.0, 10.0]
    budgets = [100.0, 90.0, 100.0]
    candidates = rng.uniform(0, 140, size=25)
    for kind in CostKind:
        fn = CostFunction(kind, 100.0)
        fast = fn.replacing(costs, budgets, 1, candidates)
        slow = [fn([costs[0], c, costs[2]], budgets) for c in candidates]
        assert np.allclose(fast, slow)


def test_batch_matches_direct_evaluation():
    rng = np.random.default_rng(4)
    rows = rng.uniform(0, 140, size=(30, 3))
    budgets = [100.0, 60.0, 100.0]
    for kind in CostKind:
        fn = CostFunction(kind, 100.0)
        assert np.allclose(fn.batch(rows, budgets), [fn(list(r), budgets) for r in rows])
        assert np.allclose(fn.batch(rows), [fn(list(r)) for r in rows])


def test_from_name():
    assert CostFunction.from_name("MinMax", 100).kind is CostKind.MINMAX
    with pytest.raises(ParameterError):
        CostFunction.from_name("sum", 100)
    with pytest.raises(ParameterError):
        CostFunction(CostKind.COMBINED, 100, k_c=0)
