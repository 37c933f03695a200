from __future__ import annotations

import math

import numpy as np
import pytest

from xychain.dynamics import PhononState, RampProfile
from xychain.errors import ConfigurationError


def test_exponential_ramp():
    ramp = RampProfile(d0=5000.0, tau=0.167e-3, duration=1e-3)
    assert ramp.value(0) == 5000.0
    assert ramp.value(1e-3) == pytest.approx(5000.0 * math.exp(-1e-3 / 0.167e-3))


def test_linear_ramp_is_clamped():
    ramp = RampProfile(d0=100.0, d_end=0.0, duration=2.0, shape="linear")
    assert ramp.value(1.0) == pytest.approx(50.0)
    assert ramp.value(5.0) == 0.0
    assert ramp.value(-1.0) == 100.0


def test_table_ramp_interpolates():
    ramp = RampProfile(
        d0=0.0, duration=1.0, shape="table", table=((0.0, 10.0), (0.5, 0.0), (1.0, 4.0))
    )
    assert ramp.value(0.25) == pytest.approx(5.0)
    assert ramp.value(0.75) == pytest.approx(2.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"d0": 1.0, "duration": 0.0, "tau": 1.0},
        {"d0": 1.0, "duration": 1.0},
        {"d0": 1.0, "duration": 1.0, "shape": "table", "table": ((0.0, 1.0),)},
        {"d0": 1.0, "duration": 1.0, "shape": "table", "table": ((0.0, 1.0), (0.0, 2.0))},
        {"d0": 1.0, "duration": 1.0, "shape": "cubic"},
    ],
)
def test_invalid_ramp(kwargs):
    with pytest.raises(ConfigurationError):
        RampProfile(**kwargs)


def test_ground_state_phonon_weights():
    assert PhononState().fock_weights(3).tolist() == [1.0, 0.0, 0.0, 0.0]


def test_thermal_phonon_weights():
    weights = PhononState(nbar=1.0).fock_weights(2)
    assert weights.sum() == pytest.approx(1.0)
    assert np.allclose(weights / weights[0], [1.0, 0.5, 0.25])


def test_negative_occupation():
    with pytest.raises(ConfigurationError):
        PhononState(nbar=-0.1)
