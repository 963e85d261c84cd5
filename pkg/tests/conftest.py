from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from mclear.clearing import clear
from mclear.io import builtin_system1, builtin_system2

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def system1():
    return builtin_system1()


@pytest.fixture(scope="session")
def system2():
    return builtin_system2()


@pytest.fixture(scope="session")
def s1_runs(system1):
    return {m: clear(system1, m) for m in ("det", "sto", "ws")}


@pytest.fixture(scope="session")
def s2_sto(system2):
    return clear(system2, "sto")


def pytest_terminal_summary(terminalreporter):
    from tests_support import ACCEPTANCE
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
