from __future__ import annotations

import numpy as np
import pytest

from xychain.errors import ConfigurationError
from xychain.quantum import (
    SpinState,
    aklt_overlaps,
    aklt_state,
    build_basis,
    inversion_op,
    reference_state,
    rotation_pi_sx_op,
)


def test_antisymmetric_reference_probabilities():
    state = reference_state("eq10_ground")
    basis = state.basis
    probabilities = state.populations()

    for labels in ("0-+", "0+-", "-+0", "+-0"):
        assert probabilities[basis.index(labels)] == pytest.approx(0.16)
    for labels in ("+0-", "-0+"):
        assert probabilities[basis.index(labels)] == pytest.approx(0.18)
    assert probabilities.sum() == pytest.approx(1.0)
    assert state.sector_populations()[0] == pytest.approx(1.0)


@pytest.mark.parametrize(
    "name, n_sites, inversion, rotation",
    [
        ("eq10_ground", None, -1, -1),
        ("all_zero", 3, 1, 1),
        ("two_spin_ground", None, 1, 1),
    ],
)
def test_symmetry_eigenvalues(name, n_sites, inversion, rotation):
    state = reference_state(name, n_sites)
    basis = state.basis
    assert inversion_op(basis).expectation(state) == pytest.approx(inversion)
    assert rotation_pi_sx_op(basis).expectation(state) == pytest.approx(rotation)


def test_aklt_state_overlaps_antisymmetric_reference():
    overlaps = aklt_overlaps(reference_state("eq10_ground"))
    assert overlaps["optimal"] >= 0.998
    assert overlaps["optimal"] >= max(v for k, v in overlaps.items() if k != "optimal") - 1e-12
    assert reference_state("aklt3").fidelity(reference_state("eq10_ground")) == pytest.approx(
        overlaps["optimal"], abs=1e-10
    )


def test_aklt_state_has_no_fully_polarized_component():
    state = aklt_state(3, np.eye(2, dtype=complex))
    basis = state.basis
    assert state.norm == pytest.approx(1.0)
    assert state.populations()[basis.index("+++")] == 0
    assert state.populations()[basis.index("++-")] == 0


def test_reference_state_site_mismatch():
    with pytest.raises(ConfigurationError):
        reference_state("eq10_ground", 4)
    with pytest.raises(ConfigurationError):
        reference_state("all_zero")


def test_records_list_nonzero_amplitudes():
    assert reference_state("all_zero", 2).records() == [
        {"index": 4, "label": "00", "re": 1.0, "im": 0.0}
    ]


def test_state_shape_is_checked():
    with pytest.raises(ConfigurationError):
        SpinState(np.zeros(8), build_basis(2))


def test_phonon_factor_is_traced_out():
    basis = build_basis(1)
    amplitudes = np.zeros(3 * 2, dtype=complex)
    amplitudes[1 * 2 + 0] = np.sqrt(0.5)
    amplitudes[1 * 2 + 1] = np.sqrt(0.5)
    state = SpinState(amplitudes, basis, phonon_dims=(2,))
    assert state.populations().tolist() == pytest.approx([0.0, 1.0, 0.0])
    assert state.spin_state().fidelity(reference_state("all_zero", 1)) == pytest.approx(1.0)
