from __future__ import annotations

import math

import pytest

from xychain.errors import ConfigurationError, HilbertSpaceSizeError
from xychain.quantum import BASIS_CAP, build_basis


@pytest.mark.parametrize(
    "n_sites, dimension",
    [(2, 3), (3, 7), (4, 19), (5, 51), (6, 141)],
)
def test_zero_magnetization_sector(n_sites, dimension):
    basis = build_basis(n_sites)
    assert len(basis.sector(0)) == dimension
    assert sum(len(basis.sector(m)) for m in basis.sectors()) == 3**n_sites


def _relative_gap(n_sites: int) -> float:
    estimate = 3**n_sites / (2 * math.sqrt(n_sites))
    return abs(len(build_basis(n_sites).sector(0)) - estimate) / estimate


def test_sector_size_approaches_estimate():
    assert _relative_gap(2) == pytest.approx(0.0572, abs=5e-4)
    assert _relative_gap(6) < _relative_gap(2)


def test_labels_are_most_significant_first():
    basis = build_basis(3)
    assert basis.label(0) == "---"
    assert basis.label(1) == "--0"
    assert basis.label(26) == "+++"
    assert basis.index("0+-") == 1 * 9 + 2 * 3 + 0
    assert basis.sz_total[basis.index("++0")] == 2


def test_bad_label():
    basis = build_basis(2)
    with pytest.raises(ConfigurationError):
        basis.index("+")
    with pytest.raises(ConfigurationError):
        basis.index("+x")


def test_size_cap():
    with pytest.raises(HilbertSpaceSizeError) as e:
        build_basis(BASIS_CAP + 1)
    assert isinstance(e.value, ConfigurationError)
    assert e.value.exit_code == 2


def test_custom_cap():
    with pytest.raises(HilbertSpaceSizeError):
        build_basis(4, cap=3)


def test_empty_basis():
    with pytest.raises(ConfigurationError):
        build_basis(0)


@pytest.mark.parametrize("n_sites", range(1, 7))
def test_every_index_round_trips_through_its_label(n_sites):
    basis = build_basis(n_sites)
    assert [basis.index(basis.label(i)) for i in range(basis.dimension)] == list(
        range(basis.dimension)
    )
