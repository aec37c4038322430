import numpy as np
import pytest

from qtgn import _backend

ACCEPTANCE_LINES = []


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", _backend.get(request.param))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
