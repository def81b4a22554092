import pytest

from fedblockhealth.crypto import GroupParams, generate_group
from fedblockhealth.rng import make_rng


@pytest.fixture
def toy_group():
    return GroupParams(23, 11, 4)


@pytest.fixture(scope="session")
def group64():
    return generate_group(64, seed=11)


@pytest.fixture(scope="session")
def group128():
    return generate_group(128, seed=3)


@pytest.fixture
def rng():
    return make_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
