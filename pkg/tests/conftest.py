import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

# criterion label -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS, key=lambda s: (int(s.split()[0].rstrip("abc")), s)):
        ok, detail = ACCEPTANCE_RESULTS[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
