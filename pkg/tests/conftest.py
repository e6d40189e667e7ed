import pytest
from hypothesis import settings

from instances import counting_db, graph_db, running_db

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def running():
    return running_db()


@pytest.fixture
def running_pub_endo():
    return running_db(("Author", "Pub"))


@pytest.fixture
def counting():
    return counting_db()


@pytest.fixture
def graph():
    return graph_db()


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
