"""
Command-line entry point.

    python -m src.ui.cli generate --seed 1 --d-max 500
    python -m src.ui.cli plan --instance instance.json --cost combined --repeat 10
    python -m src.ui.cli window --instance instance.json --plan plan.json
    python -m src.ui.cli simulate --instance instance.json --plan plan.json --fail-vehicle 2 --fail-time 50%
    python -m src.ui.cli oracle --instance tiny.json --cost minmax
    python -m src.ui.cli compare --instance instance.json --repeat 10

Exit codes: 0 success, 1 usage or invalid input, 2 infeasible result, 3 I/O error.
"""
import sys, os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "..")))

import argparse
import logging
import time
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from src.core.config import Settings, load_settings
from src.core.costs import CostFunction, CostKind
from src.core.errors import ParameterError, PlanningError
from src.core.generator import FleetParams, GridParams, generate_instance
from src.core.model import Instance, tour_cost, validate_plan
from src.core import storage
from src.planning.analytics import (compare_cost_functions, ordering_holds, repeat_seeds,
                                    replan_config_for, solver_config_for)
from src.planning.failure import FailureScenario, build_timeline, compute_window, inject_failure, replan
from src.planning.grasp import solve
from src.planning.oracle import exact_solve
from src.ui.components.battery_charts import BatteryChartGenerator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3

COST_CHOICES = [k.value for k in CostKind]


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; 2 is reserved for infeasible results here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ══════════════════════════════════════════════════════════════
# SHARED PLUMBING
# ══════════════════════════════════════════════════════════════

class Run:
    """Settings, output directory and manifest bookkeeping of one command."""

    def __init__(self, args: argparse.Namespace, settings: Settings, argv: Sequence[str]):
        self.args = args
        self.settings = settings
        self.argv = list(argv)
        self.out_dir = Path(args.out_dir)
        self.timings = {}
        self.seeds: List[int] = []
        self.instance_hash: Optional[str] = None

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def timed(self, key: str, started: float):
        self.timings[key] = round(time.perf_counter() - started, 6)

    def load_instance(self) -> Instance:
        instance = storage.read_instance(self.args.instance)
        self.instance_hash = storage.instance_hash(instance)
        return instance

    def write_manifest(self):
        manifest = storage.RunManifest(
            command=self.args.command,
            argv=self.argv,
            config=self.settings.model_dump(mode="json"),
            instance_hash=self.instance_hash,
            seeds=self.seeds,
            timings=self.timings,
        )
        path = storage.write_model(self.path(f"manifest_{self.args.command}.json"), manifest)
        logger.info("Wrote %s", path)


def _settings(args: argparse.Namespace) -> Settings:
    keys = ["seed", "workers", "restarts", "rcl_alpha", "k_c", "dt", "refine_tol",
            "replan_restarts", "full_sweep", "v_max", "v_insp"]
    overrides = {k: getattr(args, k, None) for k in keys}
    overrides["cost_function"] = getattr(args, "cost", None)
    overrides["replan_cost_function"] = getattr(args, "replan_cost", None)
    return load_settings(args.config, **overrides)


def _configure_logging(settings: Settings, args: argparse.Namespace):
    level = settings.log_level.upper()
    if args.verbose:
        level = "DEBUG"
    elif args.quiet:
        level = "WARNING"
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _with_budget(instance: Instance, budget: Optional[float]) -> Instance:
    if budget is None:
        return instance
    if instance.fleet is not None:
        raise ParameterError("--budget cannot override an instance with per-vehicle budgets")
    return replace(instance, budget=budget)


def _tour_table(instance: Instance, plan) -> pd.DataFrame:
    rows = []
    for tour, vehicle in zip(plan.tours, instance.vehicles):
        cost = tour_cost(instance, tour)
        rows.append({
            "vehicle": tour.vehicle_id,
            "segments": len(tour.visits),
            "battery_percent": round(cost.battery, 3),
            "duration_s": round(cost.duration, 1),
            "within_budget": cost.battery <= vehicle.budget,
        })
    return pd.DataFrame(rows)


def _fail_time(raw: str, t_max: float) -> float:
    """'50%' of t_max or plain seconds."""
    text = raw.strip()
    try:
        if text.endswith("%"):
            percent = float(text[:-1])
            if not 0.0 <= percent <= 100.0:
                raise ParameterError(f"--fail-time {raw} must lie in [0%, 100%]")
            return t_max * percent / 100.0
        return float(text)
    except ValueError:
        raise ParameterError(f"--fail-time must be seconds or a percentage, got '{raw}'") from None


# ══════════════════════════════════════════════════════════════
# COMMANDS
# ══════════════════════════════════════════════════════════════

def cmd_generate(run: Run) -> int:
    args, settings = run.args, run.settings
    grid = GridParams()
    grid_overrides = {
        "n_corridors": args.corridors,
        "pylon_spacing": args.spacing,
        "spacing_jitter": args.spacing_jitter,
        "branch_probability": args.branch_probability,
        "line_height": args.line_height,
    }
    grid = replace(grid, **{k: v for k, v in grid_overrides.items() if v is not None})
    fleet = FleetParams(
        n_vehicles=args.n_vehicles,
        budget=args.budget,
        v_max=settings.v_max,
        v_insp=settings.v_insp,
        energy=settings.energy_model(),
    )

    started = time.perf_counter()
    instance = generate_instance(settings.seed, args.d_max, grid, fleet)
    run.timed("generate_s", started)
    run.seeds = [settings.seed]
    run.instance_hash = storage.instance_hash(instance)

    storage.write_instance(run.path(args.output), instance)
    run.write_manifest()
    print(f"n_seg={instance.n_seg}")
    return EXIT_OK


def cmd_plan(run: Run) -> int:
    args, settings = run.args, run.settings
    instance = _with_budget(run.load_instance(), args.budget)
    run.instance_hash = storage.instance_hash(instance)
    if args.budget is not None:
        # the plan is bound to the overridden instance
        storage.write_instance(run.path("plan_instance.json"), instance)
    cost_fn = settings.cost(instance.budget)

    best = None
    traces = []
    started = time.perf_counter()
    for k, seed in enumerate(repeat_seeds(settings.seed, args.repeat)):
        result = solve(instance, solver_config_for(settings, cost_fn, seed))
        run.seeds.append(seed)
        traces.append(storage.trace_frame(result.per_restart_costs, repeat=k))
        key = (not result.feasible, result.best_cost, k)
        if best is None or key < best[0]:
            best = (key, seed, result)
    run.timed("plan_s", started)
    _, seed, result = best

    violations = [v.message for v in validate_plan(instance, result.best_plan)]
    record = storage.plan_file(instance, result.best_plan, cost_fn.name, result.best_cost, seed, violations)
    storage.write_model(run.path(args.output), record)
    if args.trace:
        storage.write_csv(run.path("trace.csv"), pd.concat(traces, ignore_index=True))
    run.write_manifest()

    print(_tour_table(instance, result.best_plan).to_string(index=False))
    print(f"cost_function={cost_fn.name} cost={result.best_cost:.4f} feasible={record.feasible} "
          f"wall_time_s={run.timings['plan_s']:.2f}")
    for message in violations:
        print(f"violation: {message}")
    return EXIT_OK if record.feasible else EXIT_INFEASIBLE


def cmd_window(run: Run) -> int:
    args, settings = run.args, run.settings
    instance = run.load_instance()
    plan, record = storage.read_plan(args.plan, instance)
    initial = CostFunction.from_name(record.cost_function, instance.budget, settings.k_c)
    config = replan_config_for(settings, initial, settings.seed)
    run.seeds = [settings.seed]

    started = time.perf_counter()
    timeline = build_timeline(instance, plan)
    report = compute_window(instance, plan, config, settings.dt, refine_tol=settings.refine_tol,
                            full_sweep=settings.full_sweep, workers=settings.workers, timeline=timeline)
    run.timed("window_s", started)

    storage.write_model(run.path(args.output), storage.WindowFile(
        instance_hash=run.instance_hash,
        plan_cost_function=record.cost_function,
        replan_cost_function=config.cost_function.name,
        seed=settings.seed,
        dt=settings.dt or report.t_max / 100.0,
        t_star=report.t_star,
        t_max=report.t_max,
        window_percent=report.window_percent,
        grid_size=report.grid_size,
        n_samples=len(report.samples),
        failed_samples=sum(not s.success for s in report.samples),
    ))
    storage.write_csv(run.path("window_samples.csv"), storage.samples_frame(report))
    storage.write_csv(run.path("timeline.csv"), storage.timeline_frame(timeline))
    if args.html:
        charts = BatteryChartGenerator(instance.budget)
        charts.write_html(charts.battery_in_time(timeline, t_star=report.t_star), run.path(args.html))
    run.write_manifest()

    print(f"window_percent={report.window_percent:.2f}")
    print(f"t_star={report.t_star:.2f}")
    print(f"t_max={report.t_max:.2f}")
    return EXIT_OK


def cmd_simulate(run: Run) -> int:
    args, settings = run.args, run.settings
    instance = run.load_instance()
    plan, record = storage.read_plan(args.plan, instance)
    timeline = build_timeline(instance, plan)
    t_fail = _fail_time(args.fail_time, timeline.t_max)

    initial = CostFunction.from_name(record.cost_function, instance.budget, settings.k_c)
    config = replan_config_for(settings, initial, settings.seed)
    run.seeds = [settings.seed]

    started = time.perf_counter()
    residual = inject_failure(instance, plan, timeline, FailureScenario(args.fail_vehicle, t_fail))
    outcome = replan(residual, config)
    run.timed("replan_s", started)

    replan_record = None
    after = None
    if outcome.plan is not None:
        violations = [v.message for v in validate_plan(outcome.instance, outcome.plan)]
        replan_record = storage.plan_file(outcome.instance, outcome.plan, config.cost_function.name,
                                          outcome.cost, settings.seed, violations)
        if outcome.success:
            after = build_timeline(
                outcome.instance, outcome.plan,
                launch_times={s.vehicle_id: s.commit_time for s in residual.survivors},
                initial_battery={s.vehicle_id: s.consumed for s in residual.survivors},
            )

    storage.write_model(run.path(args.output), storage.SimulationFile(
        instance_hash=run.instance_hash,
        failed_vehicle=args.fail_vehicle,
        t_fail=t_fail,
        t_max=timeline.t_max,
        success=outcome.success,
        reason=outcome.reason,
        inspected=list(residual.inspected),
        uninspected=list(residual.uninspected),
        survivors=[storage.SurvivorRecord(vehicle_id=s.vehicle_id, start=s.start.as_tuple(),
                                          remaining_budget=s.remaining_budget, commit_time=s.commit_time)
                   for s in residual.survivors],
        replan=replan_record,
    ))
    storage.write_csv(run.path("timeline_before.csv"), storage.timeline_frame(timeline))
    if after is not None:
        storage.write_csv(run.path("timeline_after.csv"), storage.timeline_frame(after))
    if args.html:
        charts = BatteryChartGenerator(instance.budget)
        fig = charts.battery_in_time(timeline, replan=after,
                                     title=f"UAV {args.fail_vehicle} fails at {t_fail:.1f} s")
        charts.write_html(fig, run.path(args.html))
    run.write_manifest()

    print(f"t_fail={t_fail:.2f} t_max={timeline.t_max:.2f}")
    print(f"uninspected={len(residual.uninspected)} survivors={len(residual.survivors)}")
    print(f"success={outcome.success} ({outcome.reason})")
    return EXIT_OK if outcome.success else EXIT_INFEASIBLE


def cmd_oracle(run: Run) -> int:
    args, settings = run.args, run.settings
    instance = _with_budget(run.load_instance(), args.budget)
    run.instance_hash = storage.instance_hash(instance)
    cost_fn = settings.cost(instance.budget)

    started = time.perf_counter()
    result = exact_solve(instance, cost_fn)
    run.timed("oracle_s", started)

    violations = [v.message for v in validate_plan(instance, result.optimal_plan)]
    record = storage.plan_file(instance, result.optimal_plan, cost_fn.name, result.optimal_cost,
                               settings.seed, violations)
    storage.write_model(run.path(args.output), record)
    run.write_manifest()

    print(_tour_table(instance, result.optimal_plan).to_string(index=False))
    print(f"optimal_cost={result.optimal_cost:.4f} enumerated={result.enumerated_count} "
          f"feasible={record.feasible}")
    return EXIT_OK if record.feasible else EXIT_INFEASIBLE


def cmd_compare(run: Run) -> int:
    args, settings = run.args, run.settings
    instance = _with_budget(run.load_instance(), args.budget)
    run.instance_hash = storage.instance_hash(instance)
    kinds = [CostKind(k) for k in (args.costs or COST_CHOICES)]
    run.seeds = repeat_seeds(settings.seed, args.repeat)

    started = time.perf_counter()
    runs, summary = compare_cost_functions(instance, settings, args.repeat, kinds)
    run.timed("compare_s", started)

    storage.write_csv(run.path("compare_runs.csv"), runs)
    storage.write_csv(run.path("compare_summary.csv"), summary)
    run.write_manifest()

    print(summary.to_string(index=False, float_format=lambda x: f"{x:.2f}"))
    ordered = ordering_holds(summary)
    if ordered is not None:
        print(f"combined >= cminsum >= minmax (median window): {ordered}")
    return EXIT_OK if summary["feasible_runs"].sum() > 0 else EXIT_INFEASIBLE


# ══════════════════════════════════════════════════════════════
# PARSER
# ══════════════════════════════════════════════════════════════

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="Base random seed")
    common.add_argument("--config", help="JSON file of settings")
    common.add_argument("--out-dir", default=".", help="Directory for every output file")
    common.add_argument("--workers", type=int, help="Worker processes")
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    noise.add_argument("-q", "--quiet", action="store_true", help="Warnings only")
    return common


def _solver_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--cost", choices=COST_CHOICES, help="Plan cost function")
    parser.add_argument("--k-c", dest="k_c", type=float, help="Budget penalty coefficient")
    parser.add_argument("--restarts", type=int, help="GRASP restarts per run")
    parser.add_argument("--rcl-alpha", dest="rcl_alpha", type=float, help="Candidate list greediness in [0, 1]")
    parser.add_argument("--budget", type=float, help="Override the instance budget (percent)")


def _replan_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--replan-restarts", dest="replan_restarts", type=int, help="GRASP restarts per re-plan")
    parser.add_argument("--replan-cost", dest="replan_cost", choices=COST_CHOICES,
                        help="Re-plan cost function (default: the plan's)")
    parser.add_argument("--html", help="Write a battery-in-time chart to this HTML file")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="ptl-plan", description="Fault-tolerant multi-UAV power-line inspection planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="Generate a synthetic instance")
    p.add_argument("--d-max", dest="d_max", type=float, required=True, help="Inclusion radius (m)")
    p.add_argument("--n-vehicles", dest="n_vehicles", type=int, default=4)
    p.add_argument("--budget", type=float, default=100.0, help="Per-vehicle budget (percent)")
    p.add_argument("--corridors", type=int)
    p.add_argument("--spacing", type=float, help="Pylon spacing (m)")
    p.add_argument("--spacing-jitter", dest="spacing_jitter", type=float)
    p.add_argument("--branch-probability", dest="branch_probability", type=float)
    p.add_argument("--line-height", dest="line_height", type=float)
    p.add_argument("--v-max", dest="v_max", type=float)
    p.add_argument("--v-insp", dest="v_insp", type=float)
    p.add_argument("--output", default="instance.json")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("plan", parents=[common], help="Solve an instance with GRASP")
    p.add_argument("--instance", required=True)
    _solver_flags(p)
    p.add_argument("--repeat", type=int, default=1, help="Independent seeds; the best plan is kept")
    p.add_argument("--trace", action="store_true", help="Write per-restart costs to trace.csv")
    p.add_argument("--output", default="plan.json")
    p.set_defaults(handler=cmd_plan)

    p = sub.add_parser("window", parents=[common], help="Measure the re-plan window of a plan")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--dt", type=float, help="Grid step in seconds (default 1 %% of t_max)")
    p.add_argument("--refine-tol", dest="refine_tol", type=float)
    p.add_argument("--full-sweep", dest="full_sweep", action="store_true", default=None)
    p.add_argument("--k-c", dest="k_c", type=float)
    _replan_flags(p)
    p.add_argument("--output", default="window.json")
    p.set_defaults(handler=cmd_window)

    p = sub.add_parser("simulate", parents=[common], help="Fail one vehicle and re-plan")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--fail-vehicle", dest="fail_vehicle", type=int, required=True)
    p.add_argument("--fail-time", dest="fail_time", required=True, help="Seconds, or percent of t_max as '50%%'")
    p.add_argument("--k-c", dest="k_c", type=float)
    _replan_flags(p)
    p.add_argument("--output", default="replan.json")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("oracle", parents=[common], help="Exact optimum of a tiny instance")
    p.add_argument("--instance", required=True)
    _solver_flags(p)
    p.add_argument("--output", default="oracle_plan.json")
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("compare", parents=[common], help="Window per cost function over repeated seeds")
    p.add_argument("--instance", required=True)
    _solver_flags(p)
    p.add_argument("--costs", nargs="+", choices=COST_CHOICES)
    p.add_argument("--repeat", type=int, default=10)
    p.add_argument("--dt", type=float)
    p.add_argument("--refine-tol", dest="refine_tol", type=float)
    p.add_argument("--full-sweep", dest="full_sweep", action="store_true", default=None)
    p.add_argument("--replan-restarts", dest="replan_restarts", type=int)
    p.add_argument("--replan-cost", dest="replan_cost", choices=COST_CHOICES)
    p.set_defaults(handler=cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if getattr(args, "repeat", 1) < 1:
            raise ParameterError(f"--repeat must be >= 1, got {args.repeat}")
        settings = _settings(args)
        _configure_logging(settings, args)
        return args.handler(Run(args, settings, argv))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PlanningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
