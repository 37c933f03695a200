from __future__ import annotations

import numpy as np
import pytest

from xychain.errors import ConfigurationError
from xychain.protocol import (
    MeasurementConfig,
    entanglement_vs_time,
    random_separable_state,
    witness,
)
from xychain.quantum import SpinState, build_basis, reference_state


def test_bare_amplitude_is_conservative():
    report = witness(0.86)
    assert report.lhs == pytest.approx(1.72)
    assert report.violated
    assert report.amplitude_sufficient
    assert report.conservative
    assert report.margin == pytest.approx(0.72)


def test_small_amplitude_alone_is_inconclusive():
    report = witness(0.3)
    assert not report.violated
    assert not report.amplitude_sufficient


def test_entangled_state():
    state = SpinState.from_labels(build_basis(2), {"+-": 1, "-+": 1})
    report = witness(state)
    assert report.amplitude == pytest.approx(1.0)
    assert report.rho_pm_mp == pytest.approx(0.5)
    assert report.lhs == pytest.approx(2.0)
    assert report.violated
    assert not report.conservative


def test_product_state_saturates_bound():
    report = witness(reference_state("all_zero", 2))
    assert report.p00 == pytest.approx(1.0)
    assert report.lhs == pytest.approx(1.0)
    assert not report.violated


@pytest.mark.parametrize("amplitude", [0.5, 0.5 + 1e-12])
def test_amplitude_at_the_bound_is_not_a_violation(amplitude):
    report = witness(amplitude)
    assert not report.violated
    assert not report.amplitude_sufficient


def test_product_plus_minus_sits_on_the_bound():
    report = witness(SpinState.from_labels(build_basis(2), {"+-": 1}))
    assert report.amplitude == pytest.approx(0.5, abs=1e-15)
    assert report.lhs == pytest.approx(1.0, abs=1e-15)
    assert not report.violated


def test_coherence_with_zero_zero_counts():
    state = reference_state("two_spin_ground")
    report = witness(state)
    assert report.rho_pm_00 == pytest.approx(0.5 / np.sqrt(2))
    assert report.lhs == pytest.approx(2 * 0.5 + 0.5 + 4 * 0.5 / np.sqrt(2))


def test_separable_states_never_violate():
    rng = np.random.default_rng(2024)
    worst = max(witness(random_separable_state(rng)).lhs for _ in range(10_000))
    assert worst <= 1 + 1e-9


def test_random_separable_state_is_a_density_matrix():
    rho = random_separable_state(np.random.default_rng(5), max_products=3)
    assert np.allclose(rho, rho.conj().T)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-12


def test_witness_needs_two_sites():
    with pytest.raises(ConfigurationError):
        witness(reference_state("all_zero", 3))
    with pytest.raises(ConfigurationError):
        witness(np.eye(3))


def test_entanglement_along_flop(two_ion, two_ion_couplings, transfer_time):
    points = entanglement_vs_time(two_ion, two_ion_couplings, [0.0, transfer_time], MeasurementConfig())
    start, transferred = points

    assert start.time == 0.0
    assert start.curve.amplitude == pytest.approx(0.0, abs=1e-9)
    assert start.report.lhs == pytest.approx(1.0)
    assert not start.report.violated

    assert transferred.curve.amplitude == pytest.approx(1.0, abs=1e-6)
    assert transferred.report.lhs == pytest.approx(2.0, abs=1e-6)
    assert transferred.report.violated
    assert not transferred.report.conservative


def test_noisy_entanglement_is_conservative(two_ion, two_ion_couplings, transfer_time):
    config = MeasurementConfig(rabi_noise_rel=0.05, noise_draws=16)
    (point,) = entanglement_vs_time(two_ion, two_ion_couplings, [transfer_time], config)
    assert point.report.conservative
    assert 0.5 < point.curve.amplitude < 1.0


def test_noise_draws_do_not_depend_on_the_time_grid(two_ion, two_ion_couplings, transfer_time):
    config = MeasurementConfig(rabi_noise_rel=0.05, noise_draws=8, seed=3)
    (alone,) = entanglement_vs_time(two_ion, two_ion_couplings, [transfer_time], config)
    grid = [0.0, transfer_time / 2, transfer_time]
    last = entanglement_vs_time(two_ion, two_ion_couplings, grid, config)[-1]

    assert last.curve.parity_values == pytest.approx(alone.curve.parity_values, abs=1e-10)
    assert last.report.lhs == pytest.approx(alone.report.lhs, abs=1e-10)


def test_entanglement_needs_two_ions(three_ion, alpha036_couplings):
    with pytest.raises(ConfigurationError):
        entanglement_vs_time(three_ion, alpha036_couplings, [0.0], MeasurementConfig())
