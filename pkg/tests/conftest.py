from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from exitlab import levy

settings.register_profile(
    "exitlab",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("exitlab")


CATALOG = {
    "gamma-stat": levy.GammaStationary(1.0, 1.0),
    "gamma-bdlp": levy.GammaBDLP(1.0, 1.0),
    "ig-stat": levy.IGStationary(1.0, 1.0),
    "ig-bdlp": levy.IGBDLP(1.0, 1.0),
    "pts-stat": levy.PTSStationary(1.0, 0.5, 1.0),
    "pts-bdlp": levy.PTSBDLP(1.0, 0.5, 1.0),
}


@pytest.fixture(params=sorted(CATALOG))
def catalog_spec(request):
    return CATALOG[request.param]


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, text):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
