import pytest

from securevector.paillier import keygen, seeded_rng
from securevector.params import optimal_K


@pytest.fixture(scope="session")
def keys512():
    return keygen(512, seeded_rng(512))


@pytest.fixture(scope="session")
def keys256():
    return keygen(256, seeded_rng(256))


@pytest.fixture(scope="session")
def params512():
    return optimal_K(512, 512)


@pytest.fixture
def rng():
    return seeded_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("tests.test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
