"""
Exact solver for tiny instances, used as ground truth in tests.

Every assignment of segments to vehicles is enumerated. For each vehicle and
segment subset every visit order is enumerated, and for each order the best
directions are found exactly by a two-state sweep. Since all three plan costs
are non-decreasing in every tour cost, combining the cheapest tour per
(vehicle, subset) is optimal.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from src.core.costs import CostFunction
from src.core.errors import OracleRefusal
from src.core.model import Instance, Plan, TravelTable, tour_cost, travel_table

logger = logging.getLogger(__name__)

MAX_SEGMENTS = 8
MAX_VEHICLES = 3

Seq = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class OracleResult:
    optimal_plan: Plan
    optimal_cost: float
    enumerated_count: int


def _best_directions(table: TravelTable, r: int, order: Tuple[int, ...]) -> Tuple[float, Seq]:
    """Cheapest directions for a fixed visit order; ties prefer forward earlier in the tour."""
    T, I = table.transit_rows, table.inspect_list
    k = len(order)
    if k == 0:
        return T[table.start_node(r)][0], ()

    # cost_to_go[j][d]: cost from entering visit j in direction d to the depot
    cost_to_go = [[0.0, 0.0] for _ in range(k)]
    for d in (0, 1):
        cost_to_go[k - 1][d] = I[order[k - 1]] + T[table.exit(order[k - 1], d)][0]
    for j in range(k - 2, -1, -1):
        i, nxt = order[j], order[j + 1]
        for d in (0, 1):
            x = table.exit(i, d)
            cost_to_go[j][d] = I[i] + min(T[x][table.entry(nxt, dd)] + cost_to_go[j + 1][dd] for dd in (0, 1))

    node = table.start_node(r)
    dirs = []
    for j, i in enumerate(order):
        options = [T[node][table.entry(i, d)] + cost_to_go[j][d] for d in (0, 1)]
        d = 0 if options[0] <= options[1] else 1
        dirs.append(d)
        node = table.exit(i, d)
    seq = tuple(zip(order, dirs))
    return table.sequence_cost(r, seq), seq


def _best_tour(table: TravelTable, r: int, subset: Tuple[int, ...]) -> Tuple[float, Seq]:
    ids = table.segment_ids
    by_id = tuple(sorted(subset, key=lambda i: ids[i]))
    best: Optional[Tuple[float, Seq]] = None
    for order in itertools.permutations(by_id):
        cost, seq = _best_directions(table, r, order)
        if best is None or cost < best[0]:
            best = (cost, seq)
    return best


def _candidate_count(assignment: Tuple[int, ...], n_tours: int) -> int:
    sizes = [assignment.count(r) for r in range(n_tours)]
    return math.prod(math.factorial(k) * 2 ** k for k in sizes)


def exact_solve(instance: Instance, cost_function: CostFunction) -> OracleResult:
    """
    Minimum-cost plan by exhaustive enumeration.

    Ties are broken by the lexicographically smallest plan encoding among
    plans whose tours are each cheapest for their segment subset.

    Raises:
        OracleRefusal: above MAX_SEGMENTS segments or MAX_VEHICLES vehicles
    """
    if instance.n_seg > MAX_SEGMENTS or instance.n_vehicles > MAX_VEHICLES:
        raise OracleRefusal(
            f"Oracle handles at most {MAX_SEGMENTS} segments and {MAX_VEHICLES} vehicles, "
            f"got {instance.n_seg} and {instance.n_vehicles}"
        )

    table = travel_table(instance)
    n_tours, n_seg = table.n_tours, table.n_seg
    ids = table.segment_ids
    budgets = table.budgets

    # vehicles sharing a start point share their tour table
    cache: Dict[Tuple[int, Tuple[int, ...]], Tuple[float, Seq]] = {}
    start_of = [instance.vehicles[r].start for r in range(n_tours)]
    first_with_start = [start_of.index(start_of[r]) for r in range(n_tours)]

    def tour_for(r: int, subset: Tuple[int, ...]) -> Tuple[float, Seq]:
        key = (first_with_start[r], subset)
        if key not in cache:
            cache[key] = _best_tour(table, first_with_start[r], subset)
        return cache[key]

    best = None
    enumerated = 0
    for assignment in itertools.product(range(n_tours), repeat=n_seg):
        enumerated += _candidate_count(assignment, n_tours)
        tours: List[Seq] = []
        costs: List[float] = []
        for r in range(n_tours):
            subset = tuple(i for i in range(n_seg) if assignment[i] == r)
            c, seq = tour_for(r, subset)
            tours.append(seq)
            costs.append(c)
        value = cost_function(costs, budgets)
        encoding = tuple(tuple((ids[i], d) for i, d in seq) for seq in tours)
        if best is None or (value, encoding) < (best[0], best[1]):
            best = (value, encoding, tours)

    plan = table.to_plan(best[2])
    exact_costs = [tour_cost(instance, t).battery for t in plan.tours]
    optimal = cost_function(exact_costs, budgets)
    logger.info("Oracle: %s optimum %.4f over %d candidate plans", cost_function.name, optimal, enumerated)
    return OracleResult(plan, optimal, enumerated)
