from __future__ import annotations

import pytest

from xychain.dynamics import PhononState, build_full, evolve, full_vs_effective
from xychain.errors import ConfigurationError, HilbertSpaceSizeError
from xychain.ionchain import ChainSpec, transverse_modes
from xychain.quantum import reference_state


def test_dimension_cap(three_ion):
    with pytest.raises(HilbertSpaceSizeError):
        build_full(transverse_modes(three_ion), three_ion, n_max=10)


def test_needs_a_phonon_level(two_ion):
    with pytest.raises(ConfigurationError):
        build_full(transverse_modes(two_ion), two_ion, n_max=0)


def test_full_evolution_is_unitary(two_ion):
    full = build_full(transverse_modes(two_ion), two_ion, n_max=2)
    start = full.product_state(reference_state("all_zero", 2), (0, 0))
    state = evolve(start, full, 1e-4)
    assert state.norm == pytest.approx(1.0, abs=1e-10)
    assert state.phonon_dims == (3, 3)
    assert full.top_level_population(start) == 0


def test_full_evolution_needs_phonons(two_ion):
    full = build_full(transverse_modes(two_ion), two_ion, n_max=2)
    with pytest.raises(ConfigurationError):
        evolve(reference_state("all_zero", 2), full, 1e-4)


@pytest.mark.slow
def test_effective_model_converges_with_detuning():
    spec = ChainSpec(n_ions=2)
    discrepancies = [
        full_vs_effective(spec, ratio, n_max=3, phonons=PhononState(), n_points=51).max_discrepancy
        for ratio in (10.0, 20.0, 40.0)
    ]
    assert discrepancies[1] < 0.05
    assert discrepancies[0] > discrepancies[1] > discrepancies[2]


@pytest.mark.slow
def test_comparison_reports_truncation():
    result = full_vs_effective(ChainSpec(n_ions=2), 20.0, n_max=3, n_points=21)
    assert result.top_level_population < 1e-3
    assert not result.truncation_flagged
    assert result.full_populations.shape == result.effective_populations.shape == (21, 9)
