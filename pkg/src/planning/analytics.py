"""
Cost Function Analytics
Repeated plan + re-plan window runs per cost function, summarised the way
the results are compared: best and median window per cost function.
"""

import logging
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.config import Settings
from src.core.costs import CostFunction, CostKind
from src.core.model import Instance, tour_cost
from src.planning.failure import compute_window
from src.planning.grasp import SolverConfig, derive_seed, solve

logger = logging.getLogger(__name__)

KIND_ORDER = [CostKind.MINMAX, CostKind.CMINSUM, CostKind.COMBINED]


def repeat_seeds(seed: int, repeat: int) -> List[int]:
    """Seeds of independent repeats; a single run keeps the base seed."""
    if repeat <= 1:
        return [seed]
    return [derive_seed(seed, k) for k in range(repeat)]


def solver_config_for(settings: Settings, cost_function: CostFunction, seed: int) -> SolverConfig:
    return SolverConfig(
        cost_function=cost_function,
        restarts=settings.restarts,
        rcl_alpha=settings.rcl_alpha,
        seed=seed,
        max_local_search_passes=settings.max_local_search_passes,
        workers=settings.workers,
    )


def replan_config_for(settings: Settings, initial: CostFunction, seed: int) -> SolverConfig:
    """Re-plans use the initial cost function unless settings name another one."""
    kind = settings.replan_cost_function or initial.kind
    return SolverConfig(
        cost_function=replace(initial, kind=kind),
        restarts=settings.replan_restarts,
        rcl_alpha=settings.rcl_alpha,
        seed=seed,
        max_local_search_passes=settings.max_local_search_passes,
        stop_on_feasible=settings.stop_on_feasible,
    )


class CostFunctionComparison:
    """Runs the plan + window protocol for several cost functions on one instance."""

    def __init__(self, instance: Instance, settings: Settings):
        """
        Args:
            instance: Instance to plan
            settings: Solver and sweep settings (seed is the base seed)
        """
        self.instance = instance
        self.settings = settings

    def run_once(self, kind: CostKind, seed: int) -> Dict:
        settings, instance = self.settings, self.instance
        cost_fn = CostFunction(kind, instance.budget, settings.k_c)
        result = solve(instance, solver_config_for(settings, cost_fn, seed))
        costs = [tour_cost(instance, t).battery for t in result.best_plan.tours]
        row = {
            "cost_function": kind.value,
            "seed": seed,
            "feasible": result.feasible,
            "plan_cost": result.best_cost,
            "max_tour": max(costs),
            "total_battery": sum(costs),
            "t_max": np.nan,
            "t_star": np.nan,
            "window_percent": np.nan,
        }
        if not result.feasible:
            logger.warning("%s seed %d: no feasible initial plan, window skipped", kind.value, seed)
            return row

        report = compute_window(
            instance, result.best_plan, replan_config_for(settings, cost_fn, seed),
            settings.dt, refine_tol=settings.refine_tol, full_sweep=settings.full_sweep,
            workers=settings.workers,
        )
        row.update(t_max=report.t_max, t_star=report.t_star, window_percent=report.window_percent)
        return row

    def run(self, kinds: Sequence[CostKind] = KIND_ORDER, repeat: int = 10) -> pd.DataFrame:
        """
        Returns:
            One row per (cost function, repeat)
        """
        rows = []
        for kind in kinds:
            for k, seed in enumerate(repeat_seeds(self.settings.seed, repeat)):
                row = self.run_once(kind, seed)
                row["repeat"] = k
                rows.append(row)
        columns = ["cost_function", "repeat", "seed", "feasible", "plan_cost", "max_tour",
                   "total_battery", "t_max", "t_star", "window_percent"]
        return pd.DataFrame(rows, columns=columns)


def compare_cost_functions(instance: Instance, settings: Settings, repeat: int = 10,
                           kinds: Sequence[CostKind] = KIND_ORDER) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Per-run rows and their per-cost-function summary."""
    runs = CostFunctionComparison(instance, settings).run(kinds, repeat)
    return runs, summarize(runs)


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    """
    Best / median / mean window per cost function, in minmax, cminsum,
    combined order.
    """
    if runs.empty:
        return pd.DataFrame(columns=["cost_function", "runs", "feasible_runs", "best_window",
                                     "median_window", "mean_window", "best_plan_cost"])
    grouped = runs.groupby("cost_function", sort=False)
    summary = pd.DataFrame({
        "runs": grouped.size(),
        "feasible_runs": grouped["feasible"].sum(),
        "best_window": grouped["window_percent"].max(),
        "median_window": grouped["window_percent"].median(),
        "mean_window": grouped["window_percent"].mean(),
        "best_plan_cost": grouped["plan_cost"].min(),
    })
    order = [k.value for k in KIND_ORDER if k.value in summary.index]
    return summary.loc[order].reset_index()


def ordering_holds(summary: pd.DataFrame, column: str = "median_window") -> Optional[bool]:
    """combined >= cminsum >= minmax on `column`; None if a cost function is missing."""
    values = summary.set_index("cost_function")[column]
    if not all(k.value in values.index for k in KIND_ORDER) or values.isna().any():
        return None
    return bool(values["combined"] >= values["cminsum"] >= values["minmax"])
