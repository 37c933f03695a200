from __future__ import annotations

import numpy as np
import pytest

from xychain.dynamics import RampProfile, adiabatic_prepare
from xychain.errors import ConfigurationError
from xychain.quantum import reference_state


@pytest.fixture
def exponential_ramp() -> RampProfile:
    return RampProfile(d0=5000.0, tau=0.167e-3, duration=1e-3)


def test_two_ion_ramp_is_diabatic(two_ion, two_ion_couplings, exponential_ramp):
    result = adiabatic_prepare(two_ion, two_ion_couplings, exponential_ramp, samples=21)
    basis = result.final_state.basis
    probabilities = result.final_state.populations()

    assert result.start_overlap_all_zero == pytest.approx(0.991, abs=0.005)
    assert probabilities[basis.index("00")] == pytest.approx(0.5, abs=0.05)
    assert probabilities[basis.index("+-")] == pytest.approx(0.25, abs=0.05)
    assert probabilities[basis.index("-+")] == pytest.approx(0.25, abs=0.05)
    assert np.allclose(result.trajectory.norms, 1.0, atol=1e-6)
    assert result.trajectory.fidelities[0] == pytest.approx(1.0)


def test_slow_ramp_is_adiabatic(two_ion, two_ion_couplings):
    ramp = RampProfile(d0=5000.0, tau=1.67e-3, duration=10e-3)
    result = adiabatic_prepare(two_ion, two_ion_couplings, ramp, samples=11)
    assert result.final_fidelity > 0.99
    assert result.final_state.fidelity(reference_state("two_spin_ground")) > 0.99


def test_three_ion_ramp_stays_symmetric(three_ion, alpha036_couplings, exponential_ramp):
    result = adiabatic_prepare(three_ion, alpha036_couplings, exponential_ramp, samples=11)
    symmetry = result.symmetry

    assert result.final_state.fidelity(reference_state("eq10_ground")) < 1e-6
    assert result.symmetric_fidelity > 0.9
    assert (symmetry.inversion_eigenvalue, symmetry.rotation_eigenvalue) == (1, 1)
    assert result.trajectory.populations().shape == (11, 27)


def test_energy_tracks_ramp(two_ion, two_ion_couplings, exponential_ramp):
    result = adiabatic_prepare(two_ion, two_ion_couplings, exponential_ramp, samples=11)
    energies = result.trajectory.energies
    assert energies[0] > energies[-1]


def test_rejects_unknown_start(two_ion, two_ion_couplings, exponential_ramp):
    with pytest.raises(ConfigurationError):
        adiabatic_prepare(two_ion, two_ion_couplings, exponential_ramp, "eq10_ground")  # type: ignore[arg-type]


def test_rejects_single_sample(two_ion, two_ion_couplings, exponential_ramp):
    with pytest.raises(ConfigurationError):
        adiabatic_prepare(two_ion, two_ion_couplings, exponential_ramp, samples=1)
