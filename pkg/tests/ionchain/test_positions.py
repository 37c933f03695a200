from __future__ import annotations

import numpy as np
import pytest

from xychain.errors import ConfigurationError
from xychain.ionchain import equilibrium_positions


@pytest.mark.parametrize(
    "n_ions, expected",
    [
        (2, [-0.6299605249, 0.6299605249]),
        (3, [-1.0772173450, 0.0, 1.0772173450]),
        (5, [-1.7429032119, -0.8221007566, 0.0, 0.8221007566, 1.7429032119]),
    ],
)
def test_known_positions(n_ions, expected):
    assert equilibrium_positions(n_ions) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("n_ions", [2, 3, 6, 9])
def test_positions_are_mirror_symmetric_and_ordered(n_ions):
    u = equilibrium_positions(n_ions)
    assert np.all(np.diff(u) > 0)
    assert np.array_equal(u, -u[::-1])


@pytest.mark.parametrize("n_ions", range(2, 21))
def test_forces_vanish(n_ions):
    u = equilibrium_positions(n_ions)
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    force = u - np.sum(np.sign(diff) / diff**2, axis=1)
    assert np.max(np.abs(force)) < 1e-12


def test_rejects_empty_chain():
    with pytest.raises(ConfigurationError):
        equilibrium_positions(0)


def test_four_ion_positions():
    assert equilibrium_positions(4) == pytest.approx([-1.4368, -0.4544, 0.4544, 1.4368], abs=1e-4)
