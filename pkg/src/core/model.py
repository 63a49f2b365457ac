"""
Inspection model: instances, segments, tours and the flight cost model.

Units are metres, seconds and battery percent. Transit legs are flown at
v_max and inspection legs at v_insp; each kind of leg drains the battery at
its own constant rate.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import ParameterError, ValidationError


# ══════════════════════════════════════════════════════════════
# GEOMETRY
# ══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class Point:
    """A point in local Cartesian coordinates (metres)."""
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ParameterError(f"Point coordinates must be finite, got {self}")

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def distance_to(self, other: "Point") -> float:
        return math.dist(self.as_tuple(), other.as_tuple())

    def lerp(self, other: "Point", frac: float) -> "Point":
        """Point at `frac` of the way from self to other."""
        return Point(
            self.x + (other.x - self.x) * frac,
            self.y + (other.y - self.y) * frac,
            self.z + (other.z - self.z) * frac,
        )


class Direction(str, Enum):
    FORWARD = "forward"   # a -> b
    REVERSE = "reverse"   # b -> a

    @property
    def rank(self) -> int:
        return 0 if self is Direction.FORWARD else 1

    def flipped(self) -> "Direction":
        return Direction.REVERSE if self is Direction.FORWARD else Direction.FORWARD


@dataclass(frozen=True)
class Segment:
    """A power line span between two pylons."""
    id: int
    a: Point
    b: Point

    def __post_init__(self):
        if self.a == self.b:
            raise ParameterError(f"Segment {self.id} has identical endpoints")

    @property
    def length(self) -> float:
        return self.a.distance_to(self.b)

    def entry(self, direction: Direction) -> Point:
        return self.a if direction is Direction.FORWARD else self.b

    def exit(self, direction: Direction) -> Point:
        return self.b if direction is Direction.FORWARD else self.a


# ══════════════════════════════════════════════════════════════
# ENERGY
# ══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class EnergyModel:
    """Battery drain in percent per second for each kind of leg."""
    rate_transit: float
    rate_insp: float

    def __post_init__(self):
        if not (self.rate_transit > 0 and self.rate_insp > 0):
            raise ParameterError(
                f"Energy rates must be positive, got transit={self.rate_transit}, insp={self.rate_insp}"
            )


def calibrated_energy(v_max: float, v_insp: float, distance_m: float,
                      inspection_share: float, power_ratio: float = 1.0) -> EnergyModel:
    """
    Build an energy model where a full battery (100 %) lasts exactly
    `distance_m` metres of flight, `inspection_share` of them flown at v_insp.

    Args:
        v_max: Transit velocity (m/s)
        v_insp: Inspection velocity (m/s)
        distance_m: Calibration distance for 100 % of battery
        inspection_share: Fraction of that distance flown while inspecting
        power_ratio: rate_insp / rate_transit

    Returns:
        EnergyModel with both rates in percent per second
    """
    if distance_m <= 0 or not (0.0 <= inspection_share <= 1.0) or power_ratio <= 0:
        raise ParameterError("Calibration needs distance > 0, share in [0, 1] and power ratio > 0")
    if not (v_max >= v_insp > 0):
        raise ParameterError(f"Need v_max >= v_insp > 0, got {v_max}, {v_insp}")

    transit_s = distance_m * (1.0 - inspection_share) / v_max
    inspect_s = distance_m * inspection_share / v_insp
    rate_transit = 100.0 / (transit_s + inspect_s * power_ratio)
    return EnergyModel(rate_transit=rate_transit, rate_insp=rate_transit * power_ratio)


# ══════════════════════════════════════════════════════════════
# INSTANCE
# ══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class Vehicle:
    """Where a vehicle launches from and how much battery it may still spend."""
    id: int
    start: Point
    budget: float


@dataclass(frozen=True)
class Instance:
    """
    An inspection problem: segments to cover from a common depot with a fleet
    of identical vehicles.

    `fleet` is only set for re-planning problems, where survivors launch from
    their current positions with their remaining budgets.
    """
    depot: Point
    segments: Tuple[Segment, ...]
    n_vehicles: int
    budget: float
    energy: EnergyModel
    v_max: float = 5.0
    v_insp: float = 1.0
    fleet: Optional[Tuple[Vehicle, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.fleet is not None:
            object.__setattr__(self, "fleet", tuple(self.fleet))

        if self.n_vehicles < 1:
            raise ParameterError(f"n_vehicles must be >= 1, got {self.n_vehicles}")
        if not self.budget > 0:
            raise ParameterError(f"budget must be > 0, got {self.budget}")
        if not (self.v_max >= self.v_insp > 0):
            raise ParameterError(f"Need v_max >= v_insp > 0, got {self.v_max}, {self.v_insp}")

        dupes = [sid for sid, n in Counter(s.id for s in self.segments).items() if n > 1]
        if dupes:
            raise ValidationError(f"Duplicate segment ids: {sorted(dupes)}")

        if self.fleet is not None:
            if len(self.fleet) != self.n_vehicles:
                raise ValidationError(
                    f"Fleet lists {len(self.fleet)} vehicles but n_vehicles={self.n_vehicles}"
                )
            if any(v.budget < 0 for v in self.fleet):
                raise ParameterError("Vehicle budgets must be non-negative")

    @property
    def n_seg(self) -> int:
        return len(self.segments)

    @cached_property
    def segment_map(self) -> Dict[int, Segment]:
        return {s.id: s for s in self.segments}

    @cached_property
    def vehicles(self) -> Tuple[Vehicle, ...]:
        if self.fleet is not None:
            return self.fleet
        return tuple(Vehicle(i, self.depot, self.budget) for i in range(self.n_vehicles))

    def segment(self, segment_id: int) -> Segment:
        try:
            return self.segment_map[segment_id]
        except KeyError:
            raise ValidationError(f"Unknown segment id {segment_id}") from None


# ══════════════════════════════════════════════════════════════
# TOURS AND PLANS
# ══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class Visit:
    segment_id: int
    direction: Direction = Direction.FORWARD

    def flipped(self) -> "Visit":
        return Visit(self.segment_id, self.direction.flipped())


@dataclass(frozen=True)
class Tour:
    """Ordered segment visits of one vehicle, from `start` back to `end`."""
    vehicle_id: int
    visits: Tuple[Visit, ...]
    start: Point
    end: Point

    def __post_init__(self):
        object.__setattr__(self, "visits", tuple(self.visits))
        seen = [v.segment_id for v in self.visits]
        if len(seen) != len(set(seen)):
            raise ValidationError(f"Tour of vehicle {self.vehicle_id} visits a segment twice")

    def encoding(self) -> Tuple[Tuple[int, int], ...]:
        return tuple((v.segment_id, v.direction.rank) for v in self.visits)


@dataclass(frozen=True)
class Plan:
    """One tour per vehicle; empty tours are allowed."""
    tours: Tuple[Tour, ...]

    def __post_init__(self):
        object.__setattr__(self, "tours", tuple(self.tours))

    @property
    def visit_count(self) -> int:
        return sum(len(t.visits) for t in self.tours)

    def encoding(self) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
        return tuple(t.encoding() for t in self.tours)

    def tour_for(self, vehicle_id: int) -> Tour:
        for tour in self.tours:
            if tour.vehicle_id == vehicle_id:
                return tour
        raise ValidationError(f"Plan has no tour for vehicle {vehicle_id}")


# ══════════════════════════════════════════════════════════════
# COST MODEL
# ══════════════════════════════════════════════════════════════

class Leg(NamedTuple):
    kind: str            # "transit" or "inspect"
    start: Point
    end: Point
    speed: float
    rate: float
    segment_id: Optional[int]


class TourCost(NamedTuple):
    battery: float
    duration: float


def leg_time(from_: Point, to: Point, speed: float) -> float:
    """Straight-line flight time between two points."""
    if not speed > 0:
        raise ParameterError(f"speed must be > 0, got {speed}")
    return from_.distance_to(to) / speed


def tour_legs(instance: Instance, tour: Tour) -> Iterator[Leg]:
    """Yield the transit and inspection legs a tour flies, in order."""
    pos = tour.start
    for visit in tour.visits:
        seg = instance.segment(visit.segment_id)
        entry, exit_ = seg.entry(visit.direction), seg.exit(visit.direction)
        yield Leg("transit", pos, entry, instance.v_max, instance.energy.rate_transit, None)
        yield Leg("inspect", entry, exit_, instance.v_insp, instance.energy.rate_insp, seg.id)
        pos = exit_
    yield Leg("transit", pos, tour.end, instance.v_max, instance.energy.rate_transit, None)


def tour_cost(instance: Instance, tour: Tour) -> TourCost:
    """
    Battery percent and seconds needed to fly a tour.

    Raises:
        ValidationError: if the tour references an unknown segment
    """
    battery = 0.0
    duration = 0.0
    for leg in tour_legs(instance, tour):
        t = leg_time(leg.start, leg.end, leg.speed)
        duration += t
        battery += t * leg.rate
    return TourCost(battery, duration)


@dataclass(frozen=True)
class Violation:
    """One reason a plan is not feasible."""
    kind: str                      # coverage | budget | endpoint | fleet
    message: str
    vehicle_id: Optional[int] = None
    segment_id: Optional[int] = None
    amount: float = 0.0


def validate_plan(instance: Instance, plan: Plan) -> List[Violation]:
    """
    Check coverage, budgets and tour endpoints. An empty list means feasible.

    Each tour is matched to the vehicle with its `vehicle_id` and is held to
    that vehicle's start point and budget, whatever the order of the tours.
    """
    violations: List[Violation] = []
    vehicles = {v.id: v for v in instance.vehicles}

    if len(plan.tours) != len(vehicles):
        violations.append(Violation(
            "fleet", f"Plan has {len(plan.tours)} tours for {len(vehicles)} vehicles"))
    flown = Counter(t.vehicle_id for t in plan.tours)
    for vid in sorted(vid for vid, n in flown.items() if n > 1):
        violations.append(Violation("fleet", f"Vehicle {vid} has {flown[vid]} tours", vehicle_id=vid))

    counts = Counter(v.segment_id for t in plan.tours for v in t.visits)
    for seg in instance.segments:
        n = counts.get(seg.id, 0)
        if n == 0:
            violations.append(Violation("coverage", f"Segment {seg.id} is not visited",
                                        segment_id=seg.id))
        elif n > 1:
            violations.append(Violation("coverage", f"Segment {seg.id} is visited {n} times",
                                        segment_id=seg.id, amount=float(n - 1)))
    for sid in sorted(set(counts) - set(instance.segment_map)):
        violations.append(Violation("coverage", f"Segment {sid} does not exist", segment_id=sid))

    for tour in plan.tours:
        vehicle = vehicles.get(tour.vehicle_id)
        if vehicle is None:
            violations.append(Violation("fleet", f"Plan has a tour for unknown vehicle {tour.vehicle_id}",
                                        vehicle_id=tour.vehicle_id))
            continue
        if tour.end != instance.depot:
            violations.append(Violation("endpoint", f"Tour of vehicle {tour.vehicle_id} does not end at the depot",
                                        vehicle_id=tour.vehicle_id))
        if tour.start != vehicle.start:
            violations.append(Violation("endpoint", f"Tour of vehicle {tour.vehicle_id} starts away from its vehicle",
                                        vehicle_id=tour.vehicle_id))
        if any(v.segment_id not in instance.segment_map for v in tour.visits):
            continue
        battery = tour_cost(instance, tour).battery
        if battery > vehicle.budget:
            violations.append(Violation(
                "budget",
                f"Tour of vehicle {tour.vehicle_id} needs {battery:.3f} % of a {vehicle.budget:.3f} % budget",
                vehicle_id=tour.vehicle_id, amount=battery - vehicle.budget))
    return violations


def empty_plan(instance: Instance) -> Plan:
    return Plan(tuple(Tour(v.id, (), v.start, instance.depot) for v in instance.vehicles))


# ══════════════════════════════════════════════════════════════
# TRAVEL TABLE (solver-side node indexing)
# ══════════════════════════════════════════════════════════════

class TravelTable:
    """
    Precomputed battery costs between every pair of route nodes.

    Node 0 is the depot, nodes 1..V are the vehicle start points, then each
    segment index i owns nodes base+2i (endpoint a) and base+2i+1 (endpoint b).
    Directions are encoded 0 = forward, 1 = reverse.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        vehicles = instance.vehicles
        self.n_tours = len(vehicles)
        self.base = 1 + self.n_tours
        self.segment_ids: List[int] = [s.id for s in instance.segments]
        self.index_of: Dict[int, int] = {sid: i for i, sid in enumerate(self.segment_ids)}
        self.budgets: List[float] = [v.budget for v in vehicles]

        coords = [instance.depot.as_tuple()] + [v.start.as_tuple() for v in vehicles]
        for seg in instance.segments:
            coords.append(seg.a.as_tuple())
            coords.append(seg.b.as_tuple())
        xyz = np.asarray(coords, dtype=float)
        dist = np.linalg.norm(xyz[:, None, :] - xyz[None, :, :], axis=-1)

        self.transit = dist / instance.v_max * instance.energy.rate_transit
        self.transit_rows: List[List[float]] = self.transit.tolist()
        lengths = np.array([s.length for s in instance.segments], dtype=float)
        self.inspect = lengths / instance.v_insp * instance.energy.rate_insp
        self.inspect_list: List[float] = self.inspect.tolist()

    @property
    def n_seg(self) -> int:
        return len(self.segment_ids)

    def start_node(self, tour_index: int) -> int:
        return 1 + tour_index

    def entry(self, seg_index: int, d: int) -> int:
        return self.base + 2 * seg_index + d

    def exit(self, seg_index: int, d: int) -> int:
        return self.base + 2 * seg_index + 1 - d

    def sequence_cost(self, tour_index: int, seq: Sequence[Tuple[int, int]]) -> float:
        """Battery cost of visiting (segment index, direction) pairs in order."""
        T = self.transit_rows
        node = self.start_node(tour_index)
        total = 0.0
        for i, d in seq:
            total += T[node][self.entry(i, d)] + self.inspect_list[i]
            node = self.exit(i, d)
        return total + T[node][0]

    def to_plan(self, tours: Sequence[Sequence[Tuple[int, int]]]) -> Plan:
        depot = self.instance.depot
        out = []
        for r, seq in enumerate(tours):
            vehicle = self.instance.vehicles[r]
            visits = tuple(
                Visit(self.segment_ids[i], Direction.FORWARD if d == 0 else Direction.REVERSE)
                for i, d in seq
            )
            out.append(Tour(vehicle.id, visits, vehicle.start, depot))
        return Plan(tuple(out))

    def from_plan(self, plan: Plan) -> List[List[Tuple[int, int]]]:
        return [
            [(self.index_of[v.segment_id], v.direction.rank) for v in tour.visits]
            for tour in plan.tours
        ]


@lru_cache(maxsize=16)
def travel_table(instance: Instance) -> TravelTable:
    return TravelTable(instance)
