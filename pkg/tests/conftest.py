from __future__ import annotations

import logging
import math

import pytest

from xychain.couplings import power_law_couplings
from xychain.ionchain import ChainSpec

TWO_ION_J = 1310.0


@pytest.fixture
def two_ion():
    return ChainSpec(n_ions=2)


@pytest.fixture
def two_ion_couplings():
    return power_law_couplings(2, TWO_ION_J, 1.0)


@pytest.fixture
def three_ion():
    return ChainSpec(n_ions=3)


@pytest.fixture
def alpha036_couplings():
    return power_law_couplings(3, 1000.0, 0.36)


@pytest.fixture
def transfer_time():
    """First time |00> is fully converted for J = 1.31 kHz."""
    return 1 / (2 * math.sqrt(2) * TWO_ION_J)


@pytest.fixture(autouse=True)
def restore_package_logger():
    """Drop handlers the CLI attached during the test."""
    logger = logging.getLogger("xychain")
    handlers, level = list(logger.handlers), logger.level
    yield
    logger.handlers[:] = handlers
    logger.setLevel(level)
