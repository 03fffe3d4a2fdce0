import pytest

from varhom.fields.ensemble import EnsembleSpec, Phase
from varhom.utils.utils import set_log_level


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    set_log_level("warning")


@pytest.fixture(scope="session")
def quadratic_spec():
    """Single phase a(p) = p, represented by F(p, q) = (|p|² + |q|²)/2."""
    return EnsembleSpec(phases=(Phase(1.0),), ensemble_id="identity")


@pytest.fixture(scope="session")
def checkerboard_spec():
    return EnsembleSpec(phases=(Phase(1.0), Phase(4.0)), p1=0.5, lam=4.0, ensemble_id="checkerboard")
