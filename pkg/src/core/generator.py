"""
Synthetic power line networks.

Straight corridors of pylons radiate from a substation (the depot) and may
branch. The full network is drawn up to `extent` independently of d_max and
only then filtered, so a larger d_max always yields a superset of segments
with the same ids.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.core.config import Settings
from src.core.errors import GenerationError, ParameterError
from src.core.model import EnergyModel, Instance, Point, Segment

logger = logging.getLogger(__name__)

# Branches may not turn further than this from the radial direction at their
# root, which keeps every chain moving away from the substation.
MAX_RADIAL_TURN = math.radians(75)


@dataclass(frozen=True)
class GridParams:
    """Shape of the synthetic network."""
    n_corridors: int = 4
    pylon_spacing: float = 140.0
    spacing_jitter: float = 0.15
    angle_jitter: float = 0.2
    branch_probability: float = 0.2
    branch_angle: float = 0.6
    max_branch_depth: int = 2
    max_chain_segments: int = 40
    line_height: float = 0.0
    extent: float = 5000.0


@dataclass(frozen=True)
class FleetParams:
    """Fleet and flight parameters attached to a generated instance."""
    n_vehicles: int = 4
    budget: float = 100.0
    v_max: float = 5.0
    v_insp: float = 1.0
    energy: Optional[EnergyModel] = None


def _grow_network(rng: np.random.Generator, grid: GridParams) -> List[Segment]:
    segments: List[Segment] = []
    origin = np.zeros(2)
    chains = deque()
    for k in range(grid.n_corridors):
        angle = 2 * math.pi * k / grid.n_corridors + rng.uniform(-grid.angle_jitter, grid.angle_jitter)
        chains.append((origin, angle, 0))

    while chains:
        pos, angle, depth = chains.popleft()
        heading = np.array([math.cos(angle), math.sin(angle)])
        for _ in range(grid.max_chain_segments):
            step = grid.pylon_spacing * (1.0 + rng.uniform(-grid.spacing_jitter, grid.spacing_jitter))
            nxt = pos + step * heading
            branch_roll = rng.random()
            branch_side = 1.0 if rng.random() < 0.5 else -1.0
            if np.linalg.norm(nxt) > grid.extent:
                break

            a = Point(float(pos[0]), float(pos[1]), grid.line_height)
            b = Point(float(nxt[0]), float(nxt[1]), grid.line_height)
            segments.append(Segment(len(segments), a, b))

            if depth < grid.max_branch_depth and branch_roll < grid.branch_probability:
                branch = angle + branch_side * grid.branch_angle
                radial = math.atan2(nxt[1], nxt[0])
                turn = abs((branch - radial + math.pi) % (2 * math.pi) - math.pi)
                if turn <= MAX_RADIAL_TURN:
                    chains.append((nxt, branch, depth + 1))
            pos = nxt
    return segments


def generate_instance(seed: int, d_max: float, grid: GridParams = GridParams(),
                      fleet: FleetParams = FleetParams()) -> Instance:
    """
    Deterministically generate an instance of all segments whose endpoints
    both lie within d_max of the depot.

    Args:
        seed: RNG seed; same seed and parameters give the same instance
        d_max: Inclusion radius around the depot (metres)
        grid: Network shape
        fleet: Fleet size, budget and flight parameters

    Returns:
        Instance (check `n_seg`)

    Raises:
        GenerationError: if no segment survives the radius filter
    """
    if not d_max > 0:
        raise ParameterError(f"d_max must be > 0, got {d_max}")

    rng = np.random.default_rng(seed)
    depot = Point(0.0, 0.0, 0.0)
    network = _grow_network(rng, grid)
    kept = [s for s in network
            if depot.distance_to(s.a) <= d_max and depot.distance_to(s.b) <= d_max]
    if not kept:
        raise GenerationError(
            f"No segment lies within d_max={d_max} m (network of {len(network)} segments)"
        )

    energy = fleet.energy or Settings().energy_model(fleet.v_max, fleet.v_insp)
    logger.info("Generated %d of %d segments within %.1f m (seed=%d)", len(kept), len(network), d_max, seed)
    return Instance(
        depot=depot,
        segments=tuple(kept),
        n_vehicles=fleet.n_vehicles,
        budget=fleet.budget,
        energy=energy,
        v_max=fleet.v_max,
        v_insp=fleet.v_insp,
    )
