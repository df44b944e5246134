import hypothesis
import numpy as np
import pytest

from turbmodes.modes import BeamGeometry

# property tests call quadrature-heavy code; wall-clock deadlines only
# add flakiness on shared machines
hypothesis.settings.register_profile("suite", deadline=None, max_examples=60)
hypothesis.settings.load_profile("suite")


@pytest.fixture(scope="session")
def desk_geom() -> BeamGeometry:
    """40 mm spot at 850 nm, waist plane."""
    return BeamGeometry(850e-9, 0.04, 0.0)


@pytest.fixture(autouse=True)
def _strict_float_errors():
    """Elevate accidental NaN/inf production to failures in every test."""
    with np.errstate(invalid="raise", divide="raise"):
        yield
