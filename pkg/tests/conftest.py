import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flexohom import TABLE1, HoleSpec, generate_inclusion_rve, generate_square_rve

settings.register_profile("default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def plain_mesh():
    return generate_square_rve(1.0, [], 0.25)


@pytest.fixture(scope="session")
def circle_mesh():
    return generate_square_rve(1.0, [HoleSpec("circle", (0.0, 0.0), 0.2)], 0.15)


@pytest.fixture(scope="session")
def triangle_mesh():
    return generate_square_rve(1.0, [HoleSpec("triangle", (0.0, 0.0), 0.15)], 0.15)


@pytest.fixture(scope="session")
def composite_mesh():
    return generate_inclusion_rve(1.0, [HoleSpec("triangle", (0.0, 0.0), 0.2)], 0.15)


@pytest.fixture(scope="session")
def material():
    return TABLE1.with_(l=0.3)
