"""
GRASP solver for the multiple-route set TSP.

Each restart builds a plan by randomized greedy insertion and improves it
with best-improvement local search. Restart i draws from its own RNG stream
keyed by (seed, i), so the result does not depend on how restarts are
scheduled across workers.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from typing import List, NamedTuple, Tuple

import numpy as np

from src.core.costs import CostFunction
from src.core.errors import ParameterError
from src.core.model import Instance, Plan, TravelTable, tour_cost, travel_table, validate_plan
from src.planning.neighborhoods import LocalSearch, Seq, assert_coverage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    cost_function: CostFunction
    restarts: int = 50
    rcl_alpha: float = 0.3
    seed: int = 0
    max_local_search_passes: int = 1000
    workers: int = 1
    stop_on_feasible: bool = False
    plateau_moves: bool = True

    def __post_init__(self):
        if self.restarts < 1:
            raise ParameterError(f"restarts must be >= 1, got {self.restarts}")
        if not 0.0 <= self.rcl_alpha <= 1.0:
            raise ParameterError(f"rcl_alpha must lie in [0, 1], got {self.rcl_alpha}")
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")
        if self.workers < 1 or self.max_local_search_passes < 1:
            raise ParameterError("workers and max_local_search_passes must be >= 1")


class RestartOutcome(NamedTuple):
    index: int
    plan: Plan
    cost: float
    feasible: bool


@dataclass(frozen=True)
class SolveResult:
    best_plan: Plan
    best_cost: float
    per_restart_costs: Tuple[float, ...]
    wall_time: float
    feasible: bool
    best_restart: int


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for a sub-task identified by `keys`."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(keys)).generate_state(1)[0])


# ══════════════════════════════════════════════════════════════
# CONSTRUCTION
# ══════════════════════════════════════════════════════════════

def _construct(table: TravelTable, cost_function: CostFunction,
               rng: np.random.Generator, rcl_alpha: float) -> List[Seq]:
    n_tours, budgets = table.n_tours, table.budgets
    T, insp = table.transit, table.inspect
    seg_ids = np.asarray(table.segment_ids, dtype=np.int64)

    tours: List[Seq] = [[] for _ in range(n_tours)]
    costs = [table.sequence_cost(r, []) for r in range(n_tours)]
    remaining = np.arange(table.n_seg)

    while remaining.size:
        current = cost_function(costs, budgets)
        U = remaining.size
        # columns: every remaining segment forward, then every one reversed
        fwd = table.base + 2 * remaining
        entries = np.concatenate([fwd, fwd + 1])
        exits = np.concatenate([fwd + 1, fwd])
        inspect = np.tile(insp[remaining], 2)

        blocks = []
        for r, seq in enumerate(tours):
            prev = np.array([table.start_node(r)] + [table.exit(i, d) for i, d in seq])
            nxt = np.array([table.entry(i, d) for i, d in seq] + [0])
            delta = (T[np.ix_(prev, entries)] + inspect[None, :]
                     + T[np.ix_(exits, nxt)].T - T[prev, nxt][:, None])
            blocks.append(cost_function.replacing(costs, budgets, r, costs[r] + delta).ravel() - current)
        inc = np.concatenate(blocks)

        threshold = inc.min() + rcl_alpha * (inc.max() - inc.min())
        rcl = np.flatnonzero(inc <= threshold)
        # flat index -> (tour, position, direction, segment)
        starts = np.cumsum([0] + [(len(seq) + 1) * 2 * U for seq in tours[:-1]])
        tid = np.searchsorted(starts, rcl, side="right") - 1
        pos, col = np.divmod(rcl - starts[tid], 2 * U)
        dirn, u = np.divmod(col, U)
        order = np.lexsort((dirn, pos, tid, seg_ids[remaining[u]]))
        pick = order[0] if rcl_alpha == 0 else order[rng.integers(len(order))]

        r, q, d = int(tid[pick]), int(pos[pick]), int(dirn[pick])
        tours[r].insert(q, (int(remaining[u[pick]]), d))
        costs[r] = table.sequence_cost(r, tours[r])
        remaining = np.delete(remaining, u[pick])

    assert_coverage(tours, table.n_seg)
    return tours


def construct(instance: Instance, cost_function: CostFunction,
              rng: np.random.Generator, rcl_alpha: float = 0.3) -> Plan:
    """
    Randomized greedy insertion of every segment.

    Each step scores every (segment, direction, tour, position) insertion by
    its increase of the plan cost and picks uniformly among those within
    rcl_alpha of the best. With rcl_alpha = 0 the pick is the best insertion
    with the lowest (segment id, tour, position, direction), without using rng.
    """
    table = travel_table(instance)
    return table.to_plan(_construct(table, cost_function, rng, rcl_alpha))


def local_search(instance: Instance, plan: Plan, cost_function: CostFunction,
                 max_passes: int = 1000, plateau_moves: bool = False) -> Plan:
    """
    Best-improvement descent; the returned plan never costs more than the input.

    A plan at a local optimum of the cost function comes back unchanged unless
    `plateau_moves` also lets equal-cost moves that save battery through.
    """
    table = travel_table(instance)
    tours = LocalSearch(table, cost_function, max_passes, plateau_moves).run(table.from_plan(plan))
    return table.to_plan(tours)


# ══════════════════════════════════════════════════════════════
# MULTI-START
# ══════════════════════════════════════════════════════════════

def _restart(instance: Instance, config: SolverConfig, index: int) -> RestartOutcome:
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(index,)))
    plan = construct(instance, config.cost_function, rng, config.rcl_alpha)
    plan = local_search(instance, plan, config.cost_function, config.max_local_search_passes,
                        config.plateau_moves)
    costs = [tour_cost(instance, t).battery for t in plan.tours]
    cost = config.cost_function(costs, [v.budget for v in instance.vehicles])
    feasible = not validate_plan(instance, plan)
    logger.debug("restart %d: cost=%.4f feasible=%s", index, cost, feasible)
    return RestartOutcome(index, plan, cost, feasible)


def solve(instance: Instance, config: SolverConfig) -> SolveResult:
    """
    Run `config.restarts` GRASP rounds and keep the best plan.

    Feasible plans are preferred; among them (or among all, when none is
    feasible) the lowest cost wins, ties going to the lowest restart index.
    With `stop_on_feasible` restarts run in index order and stop at the
    first feasible plan.
    """
    started = time.perf_counter()

    if config.stop_on_feasible or config.workers == 1:
        outcomes: List[RestartOutcome] = []
        for index in range(config.restarts):
            outcome = _restart(instance, config, index)
            outcomes.append(outcome)
            if config.stop_on_feasible and outcome.feasible:
                break
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_restart, repeat(instance), repeat(config), range(config.restarts)))

    best = min(outcomes, key=lambda o: (not o.feasible, o.cost, o.index))
    elapsed = time.perf_counter() - started
    logger.info(
        "%s: best cost %.4f from restart %d of %d (feasible=%s, %.2fs)",
        config.cost_function.name, best.cost, best.index, len(outcomes), best.feasible, elapsed,
    )
    return SolveResult(
        best_plan=best.plan,
        best_cost=best.cost,
        per_restart_costs=tuple(o.cost for o in outcomes),
        wall_time=elapsed,
        feasible=best.feasible,
        best_restart=best.index,
    )
