"""
Shared pytest configuration for imc-hit
Full-size statistical reproductions are marked slow and run only with --runslow
"""

import numpy as np
import pytest
from loguru import logger


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow statistical tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size reproduction, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def log_messages():
    """Collect loguru records emitted during a test"""
    messages = []
    handler = logger.add(lambda message: messages.append(message.record), level="DEBUG")
    yield messages
    logger.remove(handler)
