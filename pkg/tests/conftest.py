import sys, os
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import pytest

from factories import line_instance, make_instance


@pytest.fixture
def one_segment():
    """Depot at the origin, one segment (100,0,0)-(200,0,0), rates 0.05 / 0.02 %/s."""
    return make_instance([((100, 0, 0), (200, 0, 0))])


@pytest.fixture
def two_vehicle_line():
    return line_instance(n_seg=3, n_vehicles=2, budget=1e6)
