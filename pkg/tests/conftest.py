import tempfile
from pathlib import Path

import pytest

from mrpchan.config import load_run_config
from mrpchan.core import RandomStream
from mrpchan.scenario import load_scenario


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tempdir_path():
    with tempfile.TemporaryDirectory() as tempdir_path:
        yield Path(tempdir_path).resolve()


@pytest.fixture(scope="session")
def scenario():
    """Indoor NLoS at 28 GHz with the zenith fixed at the RP ZoD."""
    return load_scenario("inh_nlos", 28.0, {"zsd_enabled": False})


@pytest.fixture(scope="session")
def scenario_3d():
    return load_scenario("inh_nlos", 28.0)


@pytest.fixture(scope="session")
def run_config():
    return load_run_config()


@pytest.fixture
def stream():
    return RandomStream(2024)
