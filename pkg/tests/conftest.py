import pytest

from relrocket import RocketParams, StateFeedbackLaw, place_poles
from relrocket.simulation import SimConfig, initial_state, run_closed_loop

# (criterion, verdict, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load cached) numba kernels once so timings exclude JIT cost."""
    params = RocketParams.natural(m0=1.0, vbar=1.0)
    law = StateFeedbackLaw(place_poles(params, (-1.0, -1.0)))
    run_closed_loop(params, initial_state(params, p=1.0), law, SimConfig(dt=0.1, horizon=0.2))


@pytest.fixture
def unit_params():
    """vbar = c = m0 = 1, so b = -1."""
    return RocketParams.natural(m0=1.0, vbar=1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
