from __future__ import annotations

import pytest

from compprob.randomness import MONITOR


@pytest.fixture(scope="session", autouse=True)
def by_construction_tests_stay_below_one():
    """Every staged integral bound of a machine-certified test must be <= 1."""
    yield
    bad = MONITOR.by_construction_violations()
    assert not bad, f"certified tests exceeded 1: {bad}"
