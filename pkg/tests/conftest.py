import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from latinon.step import random_step_latinon

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rand_latinon():
    """Factory for random valid step Latinons keyed by an integer seed."""
    def make(seed, m_r=3, m_c=3, d=3, **kw):
        return random_step_latinon(m_r, m_c, d, np.random.default_rng(seed), **kw)
    return make


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, in criterion order."""
    from test_acceptance import VERDICTS
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(VERDICTS):
        ok, detail = VERDICTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
