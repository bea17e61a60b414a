import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spikering import balance, groundstate  # noqa: E402


@pytest.fixture(scope="session")
def profile():
    return groundstate.solve_ground_state(2, 3.0)


@pytest.fixture(scope="session")
def consts(profile):
    return groundstate.derive_constants(profile)


@pytest.fixture(scope="session")
def balanced(profile, consts):
    cache = {}

    def get(K, m=4.0, mode=None):
        key = (K, m, mode)
        if key not in cache:
            cache[key] = balance.solve_balance(K, m, consts, profile, mode)
        return cache[key]

    return get


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
