import pytest

from relu_death.init.seeding import SeedSpec


@pytest.fixture
def seed():
    return SeedSpec(20240601, "tests")
