"""
Plan-level cost functions over per-tour battery costs.

- minmax:   the most expensive tour
- cminsum:  sum of tour costs with a soft budget penalty
- combined: cminsum plus minmax divided by the number of tours
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from src.core.errors import ParameterError

DEFAULT_K_C = 1000.0

Budgets = Union[float, Sequence[float]]


class CostKind(str, Enum):
    MINMAX = "minmax"
    CMINSUM = "cminsum"
    COMBINED = "combined"


def _budget_list(c_max: Budgets, n: int) -> Sequence[float]:
    if isinstance(c_max, (int, float)):
        return [float(c_max)] * n
    if len(c_max) != n:
        raise ParameterError(f"Got {len(c_max)} budgets for {n} tours")
    return c_max


def cost_minmax(tour_costs: Sequence[float]) -> float:
    if len(tour_costs) == 0:
        raise ParameterError("cost_minmax needs at least one tour cost")
    return max(tour_costs)


def cost_constrained(tour_cost: float, c_max: float, k_c: float = DEFAULT_K_C) -> float:
    """Tour cost with the soft budget penalty; c == c_max still counts as within budget."""
    if tour_cost <= c_max:
        return tour_cost
    return tour_cost + (tour_cost - c_max) * k_c


def cost_cminsum(tour_costs: Sequence[float], c_max: Budgets, k_c: float = DEFAULT_K_C) -> float:
    if len(tour_costs) == 0:
        raise ParameterError("cost_cminsum needs at least one tour cost")
    budgets = _budget_list(c_max, len(tour_costs))
    return sum(cost_constrained(c, b, k_c) for c, b in zip(tour_costs, budgets))


def cost_combined(tour_costs: Sequence[float], c_max: Budgets, k_c: float = DEFAULT_K_C,
                  n_t: Optional[int] = None) -> float:
    if n_t is None:
        n_t = len(tour_costs)
    if n_t != len(tour_costs) or n_t < 1:
        raise ParameterError(f"n_t={n_t} does not match {len(tour_costs)} tour costs")
    return cost_cminsum(tour_costs, c_max, k_c) + cost_minmax(tour_costs) / n_t


@dataclass(frozen=True)
class CostFunction:
    """
    A selected plan cost with its penalty parameters.

    `c_max` is used unless per-tour budgets are passed, as they are when
    re-planning with the survivors' remaining budgets.
    """
    kind: CostKind
    c_max: float
    k_c: float = DEFAULT_K_C

    def __post_init__(self):
        object.__setattr__(self, "kind", CostKind(self.kind))
        if not self.k_c > 0:
            raise ParameterError(f"k_c must be > 0, got {self.k_c}")
        if not self.c_max > 0:
            raise ParameterError(f"c_max must be > 0, got {self.c_max}")

    @classmethod
    def from_name(cls, name: str, c_max: float, k_c: float = DEFAULT_K_C) -> "CostFunction":
        try:
            kind = CostKind(name.lower())
        except ValueError:
            raise ParameterError(
                f"Unknown cost function '{name}'. Use one of: {', '.join(k.value for k in CostKind)}"
            ) from None
        return cls(kind, c_max, k_c)

    @property
    def name(self) -> str:
        return self.kind.value

    def __call__(self, tour_costs: Sequence[float], budgets: Optional[Sequence[float]] = None) -> float:
        limit: Budgets = self.c_max if budgets is None else budgets
        if self.kind is CostKind.MINMAX:
            return cost_minmax(tour_costs)
        if self.kind is CostKind.CMINSUM:
            return cost_cminsum(tour_costs, limit, self.k_c)
        return cost_combined(tour_costs, limit, self.k_c)

    def replacing(self, tour_costs: Sequence[float], budgets: Sequence[float],
                  r: int, candidates: np.ndarray) -> np.ndarray:
        """
        Plan cost for each candidate value of tour r's cost, others unchanged.
        Vectorised over `candidates`.
        """
        others = [c for s, c in enumerate(tour_costs) if s != r]
        b = budgets[r]
        if self.kind is CostKind.MINMAX:
            return np.maximum(max(others, default=-np.inf), candidates)

        penalized = np.where(candidates <= b, candidates, candidates + (candidates - b) * self.k_c)
        base = sum(cost_constrained(c, bs, self.k_c)
                   for s, (c, bs) in enumerate(zip(tour_costs, budgets)) if s != r)
        total = base + penalized
        if self.kind is CostKind.CMINSUM:
            return total
        return total + np.maximum(max(others, default=-np.inf), candidates) / len(tour_costs)

    def batch(self, tour_costs: np.ndarray, budgets: Optional[Sequence[float]] = None) -> np.ndarray:
        """Plan cost of every row of a (plans, tours) array of tour costs."""
        m = np.asarray(tour_costs, dtype=float)
        worst = m.max(axis=1)
        if self.kind is CostKind.MINMAX:
            return worst
        b = np.asarray(self.c_max if budgets is None else budgets, dtype=float)
        total = np.where(m <= b, m, m + (m - b) * self.k_c).sum(axis=1)
        if self.kind is CostKind.CMINSUM:
            return total
        return total + worst / m.shape[1]
