import numpy as np
import pytest

from polysart import (
    ParallelBeamGeometry,
    ParallelBeamProjector,
    bundled_lac_model,
    bundled_spectrum,
    monoenergetic,
    two_pixel_object,
)


@pytest.fixture(scope="session")
def model():
    return bundled_lac_model()


@pytest.fixture(scope="session")
def spectrum():
    return bundled_spectrum()


@pytest.fixture(scope="session")
def mono70():
    return monoenergetic(70.0)


@pytest.fixture()
def two_pixel():
    return two_pixel_object(0.1, 0.16)


@pytest.fixture(scope="session")
def projector16():
    geometry = ParallelBeamGeometry(image_size=16, n_views=24, pixel_pitch_cm=20.0 / 16)
    return ParallelBeamProjector(geometry)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240917)
