from dataclasses import replace

import pytest

from src.core.errors import ParameterError, ValidationError
from src.core.model import (Direction, Plan, Point, Segment, Tour, Vehicle, Visit, calibrated_energy, leg_time,
                            tour_cost, travel_table, validate_plan)

from factories import DEPOT, line_instance, make_instance, random_instance


def _tour(*visits, vehicle_id=0):
    return Tour(vehicle_id, tuple(Visit(sid, d) for sid, d in visits), DEPOT, DEPOT)


def test_leg_time():
    assert leg_time(Point(0, 0, 0), Point(100, 0, 0), 5.0) == pytest.approx(20.0)
    assert leg_time(Point(0, 0, 0), Point(3, 4, 0), 1.0) == pytest.approx(5.0)
    assert leg_time(Point(7, 7, 7), Point(7, 7, 7), 3.0) == 0.0


def test_leg_time_rejects_zero_speed():
    with pytest.raises(ParameterError):
        leg_time(Point(0, 0), Point(1, 0), 0.0)


def test_empty_tour_costs_nothing(one_segment):
    assert tour_cost(one_segment, _tour()) == (0.0, 0.0)


def test_single_segment_forward(one_segment):
    cost = tour_cost(one_segment, _tour((0, Direction.FORWARD)))
    assert cost.duration == pytest.approx(160.0)
    assert cost.battery == pytest.approx(5.0)


def test_single_segment_reverse(one_segment):
    cost = tour_cost(one_segment, _tour((0, Direction.REVERSE)))
    assert cost.duration == pytest.approx(160.0)
    assert cost.battery == pytest.approx(5.0)


def test_reversed_tour_costs_the_same():
    instance = random_instance(3, n_seg=4, n_vehicles=1)
    forward = _tour((0, Direction.FORWARD), (2, Direction.REVERSE), (1, Direction.FORWARD), (3, Direction.FORWARD))
    backward = _tour(*[(v.segment_id, v.direction.flipped()) for v in reversed(forward.visits)])
    assert tour_cost(instance, backward).battery == pytest.approx(tour_cost(instance, forward).battery)


def test_cost_does_not_depend_on_segment_order():
    instance = random_instance(5, n_seg=3, n_vehicles=1)
    shuffled = replace(instance, segments=tuple(reversed(instance.segments)))
    tour = _tour((1, Direction.FORWARD), (0, Direction.REVERSE), (2, Direction.FORWARD))
    assert tour_cost(shuffled, tour).battery == pytest.approx(tour_cost(instance, tour).battery)


def test_travel_table_matches_tour_cost():
    instance = random_instance(11, n_seg=5, n_vehicles=2)
    table = travel_table(instance)
    plan = Plan((
        _tour((0, Direction.FORWARD), (3, Direction.REVERSE), vehicle_id=0),
        _tour((4, Direction.REVERSE), (1, Direction.FORWARD), (2, Direction.FORWARD), vehicle_id=1),
    ))
    for r, (tour, seq) in enumerate(zip(plan.tours, table.from_plan(plan))):
        assert table.sequence_cost(r, seq) == pytest.approx(tour_cost(instance, tour).battery)
    assert table.to_plan(table.from_plan(plan)) == plan


def test_validate_feasible_plan(one_segment):
    plan = Plan((_tour((0, Direction.FORWARD)),))
    assert validate_plan(one_segment, plan) == []


def test_validate_reports_missing_segment():
    instance = line_instance(n_seg=2)
    violations = validate_plan(instance, Plan((_tour((0, Direction.FORWARD)),)))
    assert len(violations) == 1
    assert violations[0].kind == "coverage"
    assert violations[0].segment_id == 1


def test_validate_reports_budget_overshoot():
    instance = make_instance([((100, 0, 0), (200, 0, 0))], budget=4.0)
    violations = validate_plan(instance, Plan((_tour((0, Direction.FORWARD)),)))
    assert [v.kind for v in violations] == ["budget"]
    assert violations[0].amount == pytest.approx(1.0)


def test_validate_reports_duplicate_and_wrong_fleet_size():
    instance = line_instance(n_seg=2, n_vehicles=2)
    plan = Plan((_tour((0, Direction.FORWARD), (1, Direction.FORWARD)), _tour((1, Direction.REVERSE), vehicle_id=1)))
    kinds = [v.kind for v in validate_plan(instance, plan)]
    assert kinds == ["coverage"]
    assert "fleet" in [v.kind for v in validate_plan(instance, Plan(plan.tours[:1]))]


def test_validate_reports_tour_ending_away_from_depot(one_segment):
    tour = Tour(0, (Visit(0, Direction.FORWARD),), DEPOT, Point(200, 0, 0))
    violations = validate_plan(one_segment, Plan((tour,)))
    assert [v.kind for v in violations] == ["endpoint"]
    assert violations[0].vehicle_id == 0


def test_validate_matches_tours_to_vehicles_by_id():
    far = Point(400, 0, 0)
    fleet = (Vehicle(0, DEPOT, 100.0), Vehicle(1, far, 6.0))
    instance = make_instance([((100, 0, 0), (200, 0, 0)), ((300, 0, 0), (400, 0, 0))],
                             n_vehicles=2, fleet=fleet)
    home = Tour(0, (Visit(0, Direction.FORWARD),), DEPOT, DEPOT)
    away = Tour(1, (Visit(1, Direction.REVERSE),), far, DEPOT)
    assert validate_plan(instance, Plan((away, home))) == []

    wrong = Tour(5, (Visit(0, Direction.FORWARD),), DEPOT, DEPOT)
    assert [v.kind for v in validate_plan(instance, Plan((away, wrong)))] == ["fleet"]


def test_tour_rejects_repeated_segment():
    with pytest.raises(ValidationError):
        _tour((0, Direction.FORWARD), (0, Direction.REVERSE))


def test_segment_needs_two_distinct_endpoints():
    with pytest.raises(ParameterError):
        Segment(0, Point(1, 1), Point(1, 1))


def test_unknown_segment_is_a_validation_error(one_segment):
    with pytest.raises(ValidationError):
        tour_cost(one_segment, _tour((9, Direction.FORWARD)))


def test_calibrated_energy_spends_full_battery_over_distance():
    energy = calibrated_energy(5.0, 1.0, distance_m=700.0, inspection_share=0.5)
    spent = 350.0 / 5.0 * energy.rate_transit + 350.0 / 1.0 * energy.rate_insp
    assert spent == pytest.approx(100.0)
    assert energy.rate_insp == pytest.approx(energy.rate_transit)


def test_calibrated_energy_power_ratio():
    energy = calibrated_energy(5.0, 1.0, 700.0, 0.5, power_ratio=0.5)
    assert energy.rate_insp == pytest.approx(0.5 * energy.rate_transit)
