import pytest

from bosupp.fock import FockSpace


@pytest.fixture(scope="session")
def space():
    return FockSpace(40, 8)


@pytest.fixture(scope="session")
def small_space():
    return FockSpace(24, 6)
