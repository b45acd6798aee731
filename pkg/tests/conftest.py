import math

import pytest

from tpgsim.experiment import load_experiment_config
from tpgsim.phase_matching import ProcessSpec, linearize

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def shipped_cfg():
    return load_experiment_config()


@pytest.fixture(scope="session")
def anchor():
    return ProcessSpec.degenerate(532e-9, 1491e-9, math.pi / 2)


@pytest.fixture(scope="session")
def lin(anchor):
    return linearize(anchor)


@pytest.fixture(scope="session")
def operating_inputs(shipped_cfg):
    """The shipped operating point: straight-line mismatch, delta = 2e-7."""
    return shipped_cfg.template()


@pytest.fixture(scope="session")
def disp_inputs(operating_inputs):
    """Full dispersion model at a delta large enough for a physical window."""
    return operating_inputs.with_(delta=1.0, spectral_model="dispersion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
