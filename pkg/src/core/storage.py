"""
File formats: instance, plan and window report JSON, CSV exports and the
run manifest. Every JSON file carries `format_version`.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
import pydantic
from pydantic import BaseModel, Field, field_validator

from src.core.errors import ValidationError
from src.core.model import (Direction, EnergyModel, Instance, Plan, Point, Segment, Tour, Vehicle,
                            Visit, tour_cost)

FORMAT_VERSION = 1
TOOL_VERSION = "0.3.0"

Triple = Tuple[float, float, float]


def _point(p: Triple) -> Point:
    return Point(*p)


# ══════════════════════════════════════════════════════════════
# SCHEMAS
# ══════════════════════════════════════════════════════════════

class SegmentRecord(BaseModel):
    id: int
    a: Triple
    b: Triple


class EnergyRecord(BaseModel):
    rate_transit: float
    rate_insp: float

    @field_validator("rate_transit", "rate_insp")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("energy rates must be > 0")
        return value


class VehicleRecord(BaseModel):
    id: int
    start: Triple
    budget_percent: float


class InstanceFile(BaseModel):
    format_version: int = FORMAT_VERSION
    depot: Triple
    segments: List[SegmentRecord]
    n_vehicles: int
    budget_percent: float
    v_max: float
    v_insp: float
    energy: EnergyRecord
    fleet: Optional[List[VehicleRecord]] = None

    @field_validator("format_version")
    @classmethod
    def _supported(cls, value: int) -> int:
        if value != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {value}")
        return value

    @classmethod
    def from_instance(cls, instance: Instance) -> "InstanceFile":
        return cls(
            depot=instance.depot.as_tuple(),
            segments=[SegmentRecord(id=s.id, a=s.a.as_tuple(), b=s.b.as_tuple()) for s in instance.segments],
            n_vehicles=instance.n_vehicles,
            budget_percent=instance.budget,
            v_max=instance.v_max,
            v_insp=instance.v_insp,
            energy=EnergyRecord(rate_transit=instance.energy.rate_transit, rate_insp=instance.energy.rate_insp),
            fleet=None if instance.fleet is None else [
                VehicleRecord(id=v.id, start=v.start.as_tuple(), budget_percent=v.budget) for v in instance.fleet
            ],
        )

    def to_instance(self) -> Instance:
        return Instance(
            depot=_point(self.depot),
            segments=tuple(Segment(s.id, _point(s.a), _point(s.b)) for s in self.segments),
            n_vehicles=self.n_vehicles,
            budget=self.budget_percent,
            energy=EnergyModel(self.energy.rate_transit, self.energy.rate_insp),
            v_max=self.v_max,
            v_insp=self.v_insp,
            fleet=None if self.fleet is None else tuple(
                Vehicle(v.id, _point(v.start), v.budget_percent) for v in self.fleet
            ),
        )


class TourRecord(BaseModel):
    vehicle_id: int
    start: Triple
    visits: List[Tuple[int, Direction]]
    battery_percent: float
    duration_s: float


class PlanFile(BaseModel):
    format_version: int = FORMAT_VERSION
    instance_hash: str
    cost_function: str
    cost_value: float
    feasible: bool
    seed: int
    tours: List[TourRecord]
    violations: List[str] = Field(default_factory=list)

    def to_plan(self, depot: Point) -> Plan:
        return Plan(tuple(
            Tour(t.vehicle_id, tuple(Visit(sid, d) for sid, d in t.visits), _point(t.start), depot)
            for t in self.tours
        ))


class WindowFile(BaseModel):
    format_version: int = FORMAT_VERSION
    instance_hash: str
    plan_cost_function: str
    replan_cost_function: str
    seed: int
    dt: float
    t_star: float
    t_max: float
    window_percent: float
    grid_size: int
    n_samples: int
    failed_samples: int


class SurvivorRecord(BaseModel):
    vehicle_id: int
    start: Triple
    remaining_budget: float
    commit_time: float


class SimulationFile(BaseModel):
    """One failure scenario and the survivors' re-plan (absent without survivors)."""
    format_version: int = FORMAT_VERSION
    instance_hash: str
    failed_vehicle: int
    t_fail: float
    t_max: float
    success: bool
    reason: str
    inspected: List[int]
    uninspected: List[int]
    survivors: List[SurvivorRecord]
    replan: Optional[PlanFile] = None


class RunManifest(BaseModel):
    """Everything needed to reproduce a run; timings are informational only."""
    format_version: int = FORMAT_VERSION
    tool_version: str = TOOL_VERSION
    command: str
    argv: List[str]
    config: Dict[str, Any]
    instance_hash: Optional[str] = None
    seeds: List[int] = Field(default_factory=list)
    timings: Dict[str, float] = Field(default_factory=dict)


# ══════════════════════════════════════════════════════════════
# JSON I/O
# ══════════════════════════════════════════════════════════════

def instance_hash(instance: Instance) -> str:
    payload = InstanceFile.from_instance(instance).model_dump(mode="json")
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_model(path: Path, model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n")
    return path


def _read_model(path: Path, schema: type[BaseModel]) -> BaseModel:
    text = Path(path).read_text()
    try:
        return schema.model_validate_json(text)
    except pydantic.ValidationError as exc:
        raise ValidationError(f"{path} is not a valid {schema.__name__}: {exc}") from exc


def write_instance(path: Path, instance: Instance) -> Path:
    return write_model(path, InstanceFile.from_instance(instance))


def read_instance(path: Path) -> Instance:
    return _read_model(path, InstanceFile).to_instance()


def plan_file(instance: Instance, plan: Plan, cost_function: str, cost_value: float,
              seed: int, violations: Sequence[str] = ()) -> PlanFile:
    tours = []
    for tour in plan.tours:
        cost = tour_cost(instance, tour)
        tours.append(TourRecord(
            vehicle_id=tour.vehicle_id,
            start=tour.start.as_tuple(),
            visits=[(v.segment_id, v.direction) for v in tour.visits],
            battery_percent=cost.battery,
            duration_s=cost.duration,
        ))
    return PlanFile(
        instance_hash=instance_hash(instance),
        cost_function=cost_function,
        cost_value=cost_value,
        feasible=not violations,
        seed=seed,
        tours=tours,
        violations=list(violations),
    )


def read_plan(path: Path, instance: Instance) -> Tuple[Plan, PlanFile]:
    """
    Load a plan and check it was made for `instance`.

    Raises:
        ValidationError: malformed file or instance hash mismatch
    """
    record = _read_model(path, PlanFile)
    expected = instance_hash(instance)
    if record.instance_hash != expected:
        raise ValidationError(
            f"Plan {path} was made for instance {record.instance_hash[:12]}, not {expected[:12]}"
        )
    return record.to_plan(instance.depot), record


# ══════════════════════════════════════════════════════════════
# CSV EXPORTS
# ══════════════════════════════════════════════════════════════

def timeline_frame(timeline) -> pd.DataFrame:
    """One row per timeline event: t, vehicle, battery_percent, x, y, z, event, segment_id."""
    rows = [
        {
            "t": e.t, "vehicle": track.vehicle_id, "battery_percent": e.battery,
            "x": e.position.x, "y": e.position.y, "z": e.position.z,
            "event": e.kind.value, "segment_id": e.segment_id,
        }
        for track in timeline.tracks for e in track.events
    ]
    columns = ["t", "vehicle", "battery_percent", "x", "y", "z", "event", "segment_id"]
    frame = pd.DataFrame(rows, columns=columns)
    frame["segment_id"] = frame["segment_id"].astype("Int64")
    return frame


def samples_frame(report) -> pd.DataFrame:
    frame = pd.DataFrame(
        [(s.t, s.vehicle_id, s.success, s.replan_cost) for s in report.samples],
        columns=["t", "vehicle", "success", "replan_cost"],
    )
    return frame.sort_values(["t", "vehicle"], kind="stable").reset_index(drop=True)


def trace_frame(per_restart_costs: Sequence[float], repeat: int = 0) -> pd.DataFrame:
    return pd.DataFrame({
        "repeat": repeat,
        "restart": range(len(per_restart_costs)),
        "cost": list(per_restart_costs),
    })


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path
