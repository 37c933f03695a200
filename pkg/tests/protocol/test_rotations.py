from __future__ import annotations

import math

import numpy as np
import pytest

from xychain.errors import ConfigurationError
from xychain.protocol import (
    RotationPulse,
    apply_rotation,
    apply_sequence,
    entanglement_sequence,
)
from xychain.quantum import SpinState, build_basis, reference_state


@pytest.mark.parametrize(
    "transition, target",
    [("zero_plus", 2), ("zero_minus", 0)],
)
def test_pi_pulse_moves_zero_to_partner(transition, target):
    flipped = apply_rotation(reference_state("all_zero", 1), RotationPulse(transition, math.pi))
    expected = np.zeros(3, dtype=complex)
    expected[target] = 1j
    assert np.allclose(flipped.amplitudes, expected)


def test_half_pulse_superposition():
    state = apply_rotation(reference_state("all_zero", 1), RotationPulse("zero_plus", math.pi / 2))
    assert np.allclose(state.amplitudes, [0, 1 / math.sqrt(2), 1j / math.sqrt(2)])


def test_phase_enters_the_coupled_amplitude():
    pulse = RotationPulse("zero_plus", math.pi / 2, math.pi / 2)
    state = apply_rotation(reference_state("all_zero", 1), pulse)
    assert np.allclose(state.amplitudes, [0, 1 / math.sqrt(2), -1 / math.sqrt(2)])


def test_full_turn_flips_sign_of_coupled_pair():
    unitary = RotationPulse("zero_plus", 2 * math.pi).local_unitary()
    assert np.allclose(unitary, np.diag([1, -1, -1]))


@pytest.mark.parametrize("transition", ["zero_plus", "zero_minus"])
def test_local_unitary_is_unitary(transition):
    unitary = RotationPulse(transition, 1.3, 0.7).local_unitary(theta_scale=1.1)
    assert np.allclose(unitary @ unitary.conj().T, np.eye(3))


def test_rotation_acts_on_every_site():
    basis = build_basis(2)
    state = apply_rotation(reference_state("all_zero", 2), RotationPulse("zero_minus", math.pi))
    assert state.populations()[basis.index("--")] == pytest.approx(1.0)


def test_sequence_order():
    start = reference_state("all_zero", 1)
    pulses = [RotationPulse("zero_minus", math.pi), RotationPulse("zero_plus", math.pi)]
    # |0> goes to |->, which the second pulse leaves alone.
    assert apply_sequence(start, pulses).populations() == pytest.approx([1.0, 0.0, 0.0])
    assert apply_sequence(start, pulses[::-1]).populations() == pytest.approx([0.0, 0.0, 1.0])


def test_rotation_keeps_phonon_factor():
    amplitudes = np.zeros(3 * 2, dtype=complex)
    amplitudes[1 * 2 + 1] = 1
    state = SpinState(amplitudes, build_basis(1), phonon_dims=(2,))
    flipped = apply_rotation(state, RotationPulse("zero_plus", math.pi))
    assert flipped.phonon_dims == (2,)
    assert abs(flipped.amplitudes[2 * 2 + 1]) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "transition, theta",
    [("zero_plus", -0.1), ("zero_plus", 7.0), ("plus_minus", 1.0)],
)
def test_invalid_pulse(transition, theta):
    with pytest.raises(ConfigurationError):
        RotationPulse(transition, theta)


def test_first_two_entanglement_pulses_reach_zero_zero_plus_plus():
    basis = build_basis(2)
    start = SpinState.from_labels(basis, {"+-": 1, "-+": 1})
    intermediate = apply_sequence(start, entanglement_sequence(0.0)[:2])

    expected = SpinState.from_labels(basis, {"00": 1, "++": 1})
    assert intermediate.fidelity(expected) == pytest.approx(1.0, abs=1e-12)
    populations = intermediate.populations()
    assert populations[basis.index("00")] == pytest.approx(0.5, abs=1e-12)
    assert populations[basis.index("++")] == pytest.approx(0.5, abs=1e-12)
