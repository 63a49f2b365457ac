"""Small hand-made and random instances shared by the tests."""
import numpy as np

from src.core.model import EnergyModel, Instance, Point, Segment

ENERGY = EnergyModel(rate_transit=0.05, rate_insp=0.02)
DEPOT = Point(0.0, 0.0, 0.0)


def make_instance(coords, n_vehicles=1, budget=100.0, energy=ENERGY, **kwargs) -> Instance:
    segments = tuple(Segment(i, Point(*a), Point(*b)) for i, (a, b) in enumerate(coords))
    return Instance(DEPOT, segments, n_vehicles, budget, energy, **kwargs)


def line_instance(n_seg=3, n_vehicles=1, budget=100.0, spacing=100.0) -> Instance:
    """Collinear segments [k*spacing, (k+1)*spacing] on the x axis, starting at the depot."""
    coords = [((k * spacing, 0, 0), ((k + 1) * spacing, 0, 0)) for k in range(n_seg)]
    return make_instance(coords, n_vehicles, budget)


def random_instance(seed: int, n_seg: int, n_vehicles: int, budget: float = 1e6,
                    extent: float = 200.0) -> Instance:
    rng = np.random.default_rng(seed)
    coords = []
    while len(coords) < n_seg:
        a = rng.uniform(-extent, extent, size=2)
        b = a + rng.uniform(-60.0, 60.0, size=2)
        if np.linalg.norm(b - a) > 1.0:
            coords.append(((a[0], a[1], 0.0), (b[0], b[1], 0.0)))
    return make_instance(coords, n_vehicles, budget)


def radial_instance(n_seg: int, n_vehicles: int, budget: float = 1e6, energy=ENERGY) -> Instance:
    """Identical spans from 100 m to 200 m out, evenly spaced around the depot."""
    coords = []
    for k in range(n_seg):
        c, s = float(np.cos(2 * np.pi * k / n_seg)), float(np.sin(2 * np.pi * k / n_seg))
        coords.append(((100 * c, 100 * s, 0.0), (200 * c, 200 * s, 0.0)))
    return make_instance(coords, n_vehicles, budget, energy)
