"""
Single-vehicle failure simulation and the re-plan window.

All vehicles launch at t=0. When one fails at t_fail its in-progress segment
is lost; survivors finish the segment they are inspecting (or stop where
they are when in transit) and are then re-planned from there with whatever
battery they have left. The re-plan window is the share of the mission,
counted back from its end, during which any single failure is recoverable.
"""
from __future__ import annotations

import logging
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ParameterError
from src.core.model import (Instance, Plan, Point, Vehicle, empty_plan, leg_time, tour_cost,
                            tour_legs, validate_plan)
from src.planning.grasp import SolverConfig, derive_seed, solve

logger = logging.getLogger(__name__)


# ══════════════════════════════════════════════════════════════
# TIMELINE
# ══════════════════════════════════════════════════════════════

class EventKind(str, Enum):
    TRANSIT_START = "transit-start"
    INSPECT_START = "inspect-start"
    INSPECT_END = "inspect-end"
    DEPOT_ARRIVAL = "depot-arrival"


@dataclass(frozen=True)
class TimelineEvent:
    t: float
    kind: EventKind
    position: Point
    battery: float
    segment_id: Optional[int] = None


@dataclass(frozen=True)
class VehicleTrack:
    """Piecewise-linear position and battery trajectory of one vehicle."""
    vehicle_id: int
    events: Tuple[TimelineEvent, ...]

    @cached_property
    def times(self) -> List[float]:
        return [e.t for e in self.events]

    @property
    def finish_time(self) -> float:
        return self.events[-1].t

    @property
    def final_battery(self) -> float:
        return self.events[-1].battery

    def interval_at(self, t: float) -> int:
        """Index of the last event at or before t (-1 before launch)."""
        return bisect_right(self.times, t) - 1

    def inspecting_at(self, t: float) -> Optional[int]:
        """Index of the inspect-start event whose inspection is under way at t."""
        k = self.interval_at(t)
        if 0 <= k < len(self.events) - 1 and self.events[k].kind is EventKind.INSPECT_START:
            if t < self.events[k + 1].t:
                return k
        return None

    def state_at(self, t: float) -> Tuple[Point, float]:
        """Interpolated (position, consumed battery) at time t."""
        k = self.interval_at(t)
        if k < 0:
            return self.events[0].position, self.events[0].battery
        if k >= len(self.events) - 1:
            return self.events[-1].position, self.events[-1].battery
        e0, e1 = self.events[k], self.events[k + 1]
        span = e1.t - e0.t
        frac = (t - e0.t) / span if span > 0 else 1.0
        return e0.position.lerp(e1.position, frac), e0.battery + (e1.battery - e0.battery) * frac

    def completed_segments(self, until: float) -> List[int]:
        return [e.segment_id for e in self.events if e.kind is EventKind.INSPECT_END and e.t <= until]


@dataclass(frozen=True)
class MissionTimeline:
    tracks: Tuple[VehicleTrack, ...]
    t_max: float

    def track(self, vehicle_id: int) -> VehicleTrack:
        for track in self.tracks:
            if track.vehicle_id == vehicle_id:
                return track
        raise ParameterError(f"No vehicle {vehicle_id} in timeline")

    def state_at(self, vehicle_id: int, t: float) -> Tuple[Point, float]:
        return self.track(vehicle_id).state_at(t)

    @property
    def event_times(self) -> List[float]:
        return sorted({e.t for track in self.tracks for e in track.events})


def build_timeline(instance: Instance, plan: Plan,
                   launch_times: Optional[Mapping[int, float]] = None,
                   initial_battery: Optional[Mapping[int, float]] = None) -> MissionTimeline:
    """
    Timed events of every tour.

    Args:
        instance: Problem the plan solves
        plan: Feasible plan
        launch_times: Per-vehicle launch time (default 0)
        initial_battery: Per-vehicle battery already consumed at launch (default 0)

    Returns:
        MissionTimeline; t_max is the latest depot arrival

    Raises:
        ParameterError: if the plan is not feasible for the instance
    """
    violations = validate_plan(instance, plan)
    if violations:
        raise ParameterError(f"Cannot build a timeline for an infeasible plan: {violations[0].message}")
    launch_times = launch_times or {}
    initial_battery = initial_battery or {}

    tracks = []
    for tour in plan.tours:
        t = launch_times.get(tour.vehicle_id, 0.0)
        battery = initial_battery.get(tour.vehicle_id, 0.0)
        events: List[TimelineEvent] = []
        if tour.visits or tour.start != tour.end:
            for leg in tour_legs(instance, tour):
                kind = EventKind.TRANSIT_START if leg.kind == "transit" else EventKind.INSPECT_START
                events.append(TimelineEvent(t, kind, leg.start, battery, leg.segment_id))
                duration = leg_time(leg.start, leg.end, leg.speed)
                t += duration
                battery += duration * leg.rate
                if leg.kind == "inspect":
                    events.append(TimelineEvent(t, EventKind.INSPECT_END, leg.end, battery, leg.segment_id))
        events.append(TimelineEvent(t, EventKind.DEPOT_ARRIVAL, tour.end, battery))
        tracks.append(VehicleTrack(tour.vehicle_id, tuple(events)))

    t_max = max((track.finish_time for track in tracks), default=0.0)
    return MissionTimeline(tuple(tracks), t_max)


# ══════════════════════════════════════════════════════════════
# FAILURE INJECTION AND RE-PLANNING
# ══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class FailureScenario:
    failed_vehicle: int
    t_fail: float


@dataclass(frozen=True)
class Survivor:
    vehicle_id: int
    start: Point
    remaining_budget: float
    commit_time: float
    consumed: float


@dataclass(frozen=True)
class ResidualInstance:
    """The re-planning problem left behind by a failure."""
    base: Instance
    scenario: FailureScenario
    survivors: Tuple[Survivor, ...]
    uninspected: Tuple[int, ...]
    inspected: Tuple[int, ...]
    failed_finished: bool

    def to_instance(self) -> Instance:
        if not self.survivors:
            raise ParameterError("A residual instance without survivors has no fleet")
        base = self.base
        return Instance(
            depot=base.depot,
            segments=tuple(base.segment(sid) for sid in self.uninspected),
            n_vehicles=len(self.survivors),
            budget=base.budget,
            energy=base.energy,
            v_max=base.v_max,
            v_insp=base.v_insp,
            fleet=tuple(Vehicle(s.vehicle_id, s.start, s.remaining_budget) for s in self.survivors),
        )


def inject_failure(instance: Instance, plan: Plan, timeline: MissionTimeline,
                   scenario: FailureScenario) -> ResidualInstance:
    """
    Remove the failed vehicle and commit every survivor.

    A survivor inspecting at t_fail commits when that inspection ends, at the
    segment's exit endpoint; otherwise it commits at t_fail where it is.
    A segment counts as inspected only once its inspection leg has ended.

    Raises:
        ParameterError: t_fail outside [0, t_max] or unknown vehicle
    """
    t_fail = scenario.t_fail
    if not 0.0 <= t_fail <= timeline.t_max:
        raise ParameterError(f"t_fail={t_fail} lies outside [0, {timeline.t_max}]")
    failed_track = timeline.track(scenario.failed_vehicle)
    budgets = {v.id: v.budget for v in instance.vehicles}

    done = set(failed_track.completed_segments(t_fail))
    survivors = []
    for track in timeline.tracks:
        if track.vehicle_id == scenario.failed_vehicle:
            continue
        k = track.inspecting_at(t_fail)
        if k is not None:
            end = track.events[k + 1]
            commit, position, consumed = end.t, end.position, end.battery
        else:
            commit = t_fail
            position, consumed = track.state_at(t_fail)
        done.update(track.completed_segments(commit))
        survivors.append(Survivor(
            track.vehicle_id, position, max(0.0, budgets[track.vehicle_id] - consumed), commit, consumed))

    return ResidualInstance(
        base=instance,
        scenario=scenario,
        survivors=tuple(survivors),
        uninspected=tuple(s.id for s in instance.segments if s.id not in done),
        inspected=tuple(s.id for s in instance.segments if s.id in done),
        failed_finished=t_fail >= failed_track.finish_time,
    )


@dataclass(frozen=True)
class ReplanOutcome:
    success: bool
    plan: Optional[Plan]
    instance: Optional[Instance]
    cost: Optional[float]
    reason: str


def replan(residual: ResidualInstance, solver_config: SolverConfig) -> ReplanOutcome:
    """
    Re-plan the un-inspected segments with the survivors.

    Tours start at the survivors' commit positions, end at the depot and are
    held to the survivors' remaining budgets. An infeasible result is a
    failed re-plan, not an error. Without survivors the mission only counts
    as recovered when nothing is left and the failed vehicle was already home.
    """
    if not residual.survivors:
        ok = not residual.uninspected and residual.failed_finished
        return ReplanOutcome(ok, None, None, None, "mission complete" if ok else "no surviving vehicles")

    problem = residual.to_instance()
    budgets = [v.budget for v in problem.vehicles]
    if not residual.uninspected:
        plan = empty_plan(problem)
        violations = validate_plan(problem, plan)
        cost = solver_config.cost_function([tour_cost(problem, t).battery for t in plan.tours], budgets)
        reason = "return to depot" if not violations else violations[0].message
        return ReplanOutcome(not violations, plan, problem, cost, reason)

    result = solve(problem, solver_config)
    reason = "feasible" if result.feasible else "no feasible plan found"
    return ReplanOutcome(result.feasible, result.best_plan, problem, result.best_cost, reason)


# ══════════════════════════════════════════════════════════════
# RE-PLAN WINDOW
# ══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class WindowSample:
    t: float
    vehicle_id: int
    success: bool
    replan_cost: Optional[float]


@dataclass(frozen=True)
class WindowReport:
    t_star: float
    t_max: float
    window_percent: float
    samples: Tuple[WindowSample, ...]
    grid_size: int


def window_grid(timeline: MissionTimeline, dt: float) -> np.ndarray:
    """Multiples of dt plus every event time, up to and including t_max."""
    t_max = timeline.t_max
    steps = np.arange(0.0, t_max, dt)
    grid = np.unique(np.concatenate([steps, timeline.event_times, [0.0, t_max]]))
    return grid[grid <= t_max]


def _run_sample(instance: Instance, plan: Plan, timeline: MissionTimeline, config: SolverConfig,
                t: float, index: int, vehicle_id: int) -> WindowSample:
    residual = inject_failure(instance, plan, timeline, FailureScenario(vehicle_id, t))
    sample_config = replace(config, seed=derive_seed(config.seed, index, vehicle_id), workers=1)
    outcome = replan(residual, sample_config)
    return WindowSample(t, vehicle_id, outcome.success, outcome.cost)


class _Sweep:
    """Evaluates every vehicle's failure at given times, optionally on a process pool."""

    def __init__(self, instance, plan, timeline, config, pool: Optional[ProcessPoolExecutor]):
        self.args = (instance, plan, timeline, config)
        self.vehicles = [track.vehicle_id for track in timeline.tracks]
        self.pool = pool
        self.samples: List[WindowSample] = []

    def run(self, points: Sequence[Tuple[float, int]]) -> Dict[int, bool]:
        tasks = [(t, index, v) for t, index in points for v in self.vehicles]
        ts, indices, vehicles = zip(*tasks)
        n = len(tasks)
        if self.pool is not None:
            results = list(self.pool.map(_run_sample, *(([a] * n) for a in self.args), ts, indices, vehicles))
        else:
            results = [_run_sample(*self.args, t, i, v) for t, i, v in tasks]
        self.samples.extend(results)

        outcome: Dict[int, bool] = {}
        for (t, index, _), sample in zip(tasks, results):
            outcome[index] = outcome.get(index, True) and sample.success
        return outcome


def compute_window(instance: Instance, plan: Plan, solver_config: SolverConfig,
                   dt: Optional[float] = None, *, refine_tol: float = 0.1,
                   full_sweep: bool = False, workers: int = 1,
                   timeline: Optional[MissionTimeline] = None) -> WindowReport:
    """
    Sweep failure times and report the re-plan window.

    Grid times are evaluated from t_max backwards; t_star is the start of the
    longest all-success suffix of the grid, then refined by bisection inside
    the interval below it down to `refine_tol` seconds.

    Args:
        instance: Instance the plan solves
        plan: Feasible initial plan
        solver_config: Solver settings used for every re-plan
        dt: Grid step (default 1 % of t_max)
        refine_tol: Bisection tolerance in seconds
        full_sweep: Evaluate the whole grid instead of stopping at the first failure
        workers: Process count for sample evaluation
        timeline: Precomputed timeline of the plan

    Returns:
        WindowReport
    """
    if dt is not None and not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    timeline = timeline or build_timeline(instance, plan)
    t_max = timeline.t_max
    if t_max == 0:
        return WindowReport(0.0, 0.0, 100.0, (), 0)

    grid = window_grid(timeline, dt or t_max / 100.0)
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        sweep = _Sweep(instance, plan, timeline, solver_config, pool)
        if full_sweep:
            success = sweep.run([(float(t), i) for i, t in enumerate(grid)])
        else:
            success = {}
            for i in range(len(grid) - 1, -1, -1):
                success.update(sweep.run([(float(grid[i]), i)]))
                if not success[i]:
                    break

        star = len(grid)
        while star > 0 and success.get(star - 1, False):
            star -= 1

        if star == len(grid):
            t_star = t_max
        elif star == 0:
            t_star = 0.0
        else:
            lo, hi = float(grid[star - 1]), float(grid[star])
            index = len(grid)
            while hi - lo > refine_tol:
                mid = 0.5 * (lo + hi)
                if sweep.run([(mid, index)])[index]:
                    hi = mid
                else:
                    lo = mid
                index += 1
            t_star = hi
    finally:
        if pool is not None:
            pool.shutdown()

    window = min(100.0, max(0.0, 100.0 * (t_max - t_star) / t_max))
    logger.info("Re-plan window %.2f %% (t_star=%.2f s, t_max=%.2f s, %d samples)",
                window, t_star, t_max, len(sweep.samples))
    return WindowReport(t_star, t_max, window, tuple(sweep.samples), len(grid))
