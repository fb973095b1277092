import os
import sys

import pytest

# Add root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.model.scenario import default_scenario  # noqa: E402
from src.sensing import PerfectSensing  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long reproduction runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance check (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def cfg():
    """Numerical-results default network."""
    return default_scenario()


@pytest.fixture
def small_cfg():
    """Few SUs and a small window, fast to analyze and simulate."""
    return default_scenario(num_su_pairs=3, mac__contention_window=8, mac__max_contention_window=8)


@pytest.fixture
def changing_cfg():
    """Short PU periods and a packet long enough for two changes inside it."""
    return default_scenario(
        num_su_pairs=2,
        pu__mean_idle="60ms",
        pu__mean_active="40ms",
        pu__min_idle="40ms",
        pu__min_active="40ms",
        pu__evacuation_time="40ms",
        mac__fragment_time="40ms",
        mac__fragments_per_packet=2,
        mac__contention_window=4,
        mac__max_contention_window=4,
    )


@pytest.fixture
def perfect(cfg):
    return PerfectSensing(window=cfg.mac.fragment_time)
