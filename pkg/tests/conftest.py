import numpy as np
import pytest

from zipsim.config import apply_overrides, default_config


@pytest.fixture
def cfg():
    return default_config()


@pytest.fixture
def short_cfg():
    """Short runs for envsim/harness tests that only need a few minutes of data."""
    return apply_overrides(default_config(), {
        "run.audio_duration": 120.0,
        "run.light_duration": 600.0,
        "run.co2_duration": 900.0,
    })


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
