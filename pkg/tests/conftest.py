import numpy as np
import pytest

from manifold_ar.arproc import initial_point, simulate_ar1
from manifold_ar.core.matcore import expm, sample_antisym
from manifold_ar.models import ProcessSpec


@pytest.fixture(autouse=True, scope="session")
def _log_dir(tmp_path_factory):
    """Keep rotating log files out of the working tree."""
    mp = pytest.MonkeyPatch()
    mp.setenv("MANIFOLD_AR_LOG_DIR", str(tmp_path_factory.mktemp("logs")))
    yield
    mp.undo()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rotation(n, angle, rng):
    """Rotation at bi-invariant distance `angle` from I_n in a random direction."""
    x = sample_antisym(n, 1.0, rng)
    return expm(angle * x / np.linalg.norm(x))


def make_trajectory(kind, n, k, steps, sigma, phi, seed=0, start=None):
    spec = ProcessSpec(
        manifold=kind,
        phi=phi,
        sigma=sigma,
        steps=steps,
        initial_point=initial_point(kind, n, k) if start is None else start,
        seed=seed,
    )
    return simulate_ar1(spec)


@pytest.fixture
def trajectory_factory():
    return make_trajectory


@pytest.fixture
def rotation_factory():
    return rotation

