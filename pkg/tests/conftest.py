import json
from pathlib import Path

import pytest

from yoccoz.dynamics import airplane_parameter, fixed_points
from yoccoz.puzzle import build_puzzle

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def frozen():
    return json.loads((FIXTURES / "derived.json").read_text())


@pytest.fixture(scope="session")
def airplane():
    return airplane_parameter()


@pytest.fixture(scope="session")
def puzzle_i():
    return build_puzzle(fixed_points(1j), 10)


@pytest.fixture(scope="session")
def puzzle_m2():
    return build_puzzle(fixed_points(-2), 10)


@pytest.fixture(scope="session")
def puzzle_air(airplane):
    return build_puzzle(fixed_points(airplane), 10)


@pytest.fixture(scope="session")
def small_i():
    """Coarse c = i puzzle for cheap structural checks."""
    return build_puzzle(fixed_points(1j), 6, resolution=512)
