import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from catsize.space import DensityMatrix, SpaceSpec

settings.register_profile("ci", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def random_hermitian(rng, d, scale=1.0):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (m + m.conj().T)


def random_ket(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_density(rng, d, rank=None):
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_state(rng, kind=None):
    """Random mixed state on a small Fock space (dim <= 10) or spin space (N <= 8)."""
    kind = kind or ("fock" if rng.random() < 0.5 else "spin")
    if kind == "fock":
        space = SpaceSpec.fock(int(rng.integers(3, 11)))
    else:
        space = SpaceSpec.spin(int(rng.integers(1, 9)))
    d = space.dimension
    return DensityMatrix(space, random_density(rng, d, int(rng.integers(1, d + 1))))


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)
