from __future__ import annotations

import math

import numpy as np
import pytest

from xychain.errors import ConfigurationError, NormalizationError
from xychain.protocol import MeasurementConfig, detect, parity
from xychain.quantum import SpinState, build_basis, reference_state


def test_only_zero_is_dark():
    state = SpinState.from_labels(build_basis(2), {"0+": 1})
    detection = detect(state, MeasurementConfig())
    assert detection.probabilities.tolist() == [0.0, 0.0, 1.0, 0.0]
    assert detection.pattern_label(2) == "DB"
    assert detection.marginals().tolist() == [0.0, 1.0, 0.0]
    assert detection.shots is None


@pytest.mark.parametrize(
    "mapping, dark_patterns",
    [("none", 0.0), ("pi_plus", 1.0), ("pi_minus", 0.0)],
)
def test_mapping_pulse(mapping, dark_patterns):
    state = SpinState.from_labels(build_basis(2), {"++": 1})
    detection = detect(state, MeasurementConfig(mapping=mapping))
    assert detection.probabilities[3] == pytest.approx(dark_patterns)


def test_sampled_counts_follow_probabilities():
    state = SpinState.from_labels(build_basis(2), {"00": 1, "+-": 1, "0+": 1})
    exact = detect(state, MeasurementConfig())
    sampled = detect(state, MeasurementConfig(shots=5000, seed=11), key=(0, 0))

    assert sampled.shots == 5000
    gap = np.max(np.abs(np.cumsum(sampled.probabilities) - np.cumsum(exact.probabilities)))
    assert gap < 3 / math.sqrt(5000)


def test_sampling_is_reproducible():
    state = SpinState.from_labels(build_basis(2), {"00": 1, "+-": 1})
    config = MeasurementConfig(shots=100, seed=3)

    first = detect(state, config, key=(1, 2)).counts
    second = detect(state, config, key=(1, 2)).counts
    assert first is not None
    assert np.array_equal(first, second)


def test_pulse_area_noise_averages_distribution():
    state = reference_state("all_zero", 1)
    config = MeasurementConfig(mapping="pi_plus")
    exact = detect(state, config)
    smeared = detect(state, config, theta_scales=np.array([0.5, 1.0]))
    assert exact.probabilities[1] == pytest.approx(0.0, abs=1e-12)
    assert smeared.probabilities[1] == pytest.approx(0.5 * math.cos(math.pi / 4) ** 2)


def test_parity_of_marginals():
    assert parity([0.0, 0.0, 1.0]) == 1.0
    assert parity([0.1, 0.9]) == pytest.approx(-0.8)


def test_parity_rejects_unnormalized_marginals():
    with pytest.raises(NormalizationError) as e:
        parity([0.5, 0.4])
    assert e.value.exit_code == 4


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mapping": "pi_zero"},
        {"shots": 0},
        {"rabi_noise_rel": -0.1},
        {"noise_draws": 0},
    ],
)
def test_invalid_measurement_config(kwargs):
    with pytest.raises(ConfigurationError):
        MeasurementConfig(**kwargs)


def test_noise_scales():
    assert MeasurementConfig().noise_scales(0).tolist() == [1.0]

    config = MeasurementConfig(rabi_noise_rel=0.05, noise_draws=1000, seed=5)
    scales = config.noise_scales(0)
    assert len(scales) == 1000
    assert np.array_equal(scales, config.noise_scales(0))
    assert np.std(scales) == pytest.approx(0.05, rel=0.15)
