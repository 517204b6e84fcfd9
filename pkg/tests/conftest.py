"""Shared small test instances.

The session-scoped fixtures build one small survey with a disk-shaped salt
body; expensive forward solves are reused across test modules.
"""

import numpy as np
import pytest

from saltfwi.grid import Grid2D
from saltfwi.helmholtz import PmlConfig
from saltfwi.model import BackgroundParam, Ellipse, linear_background, make_salt_model
from saltfwi.survey import Acquisition, forward_model


@pytest.fixture(scope="session")
def small_grid():
    return Grid2D(nx=40, nz=20, h=50.0)


@pytest.fixture(scope="session")
def small_background(small_grid):
    return linear_background(small_grid, BackgroundParam(v_top=1500.0, b=0.8333))


@pytest.fixture(scope="session")
def small_salt_model(small_grid, small_background):
    shape = Ellipse(center=(975.0, 450.0), semi_axes=(350.0, 200.0))
    return make_salt_model(small_grid, small_background, shape, v_salt=4500.0)


@pytest.fixture(scope="session")
def small_acq(small_grid):
    xs = np.linspace(100.0, 1850.0, 3)
    xr = np.linspace(50.0, 1900.0, 12)
    return Acquisition(
        sources=[(round(x / 50) * 50.0, 0.0) for x in xs],
        receivers=[(round(x / 50) * 50.0, 50.0) for x in xr],
        frequencies=[2.5, 3.0],
        bands=((0,), (1,)),
    )


@pytest.fixture(scope="session")
def small_pml():
    return PmlConfig(width=12)


@pytest.fixture(scope="session")
def small_data(small_grid, small_salt_model, small_acq, small_pml):
    return forward_model(small_grid, small_salt_model.m, small_acq, pml=small_pml)
