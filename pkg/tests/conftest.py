import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wmalab.measures import Grid

settings.register_profile("lab", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

# criterion number -> (passed, summary); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def grid():
    return Grid(-60.0, 60.0, 6000)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
