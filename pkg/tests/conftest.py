"""Shared fixtures: a few tessellations reused across test modules."""

import numpy as np
import pytest

from tessperc.geom2d import Window, unit_square_window
from tessperc.tessellation import GeneratorConfig, build


def _cfg(model, t, seed, **kw):
    return GeneratorConfig(model=model, region=unit_square_window(t),
                           seed=seed, **kw)


@pytest.fixture(scope="session")
def square_t120():
    return build(_cfg("lattice", 120, 1, lattice_code="4.4.4.4",
                      edge_length=1.0))


@pytest.fixture(scope="session")
def honeycomb_t120():
    return build(_cfg("lattice", 120, 1, lattice_code="6.6.6",
                      edge_length=1.0))


@pytest.fixture(scope="session")
def voronoi_t120():
    return build(_cfg("voronoi", 120, 1, intensity=1.0))


@pytest.fixture(scope="session")
def line_t120():
    return build(_cfg("line", 120, 1, intensity=1.0))


@pytest.fixture
def inner_window():
    """Unit-shape window of area 100 centred at the origin, safely inside
    the t=120 core regions."""
    sq = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    return Window(sq, scale_t=100.0)
