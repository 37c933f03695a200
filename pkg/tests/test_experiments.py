from __future__ import annotations

import msgspec
import pytest

from tests.utils import read_csv, read_json
from xychain.config import EXPERIMENTS, ExperimentConfig, load_config
from xychain.experiments import RUNNERS, run_experiment


def run(tmp_path, experiment, presets=(), **overrides):
    config = load_config(presets=presets, overrides={"experiment": experiment, **overrides})
    return run_experiment(config, threads=2, directory=tmp_path / experiment)


def test_every_experiment_has_a_runner():
    assert set(RUNNERS) == set(EXPERIMENTS)


def test_dynamics(tmp_path, transfer_time):
    result = run(tmp_path, "dynamics", ["paper_2ion"], duration=transfer_time, time_points=3)
    rows = read_csv(result.directory / "populations.csv")

    assert list(rows[0]) == ["time_s", "norm", "energy_hz", "-+", "00", "+-"]
    assert [float(r["00"]) for r in rows] == pytest.approx([1.0, 0.5, 0.0], abs=1e-9)
    assert result.summary["norm_drift"] < 1e-12
    assert (result.directory / "populations.gp").exists()


def test_dynamics_default_duration(tmp_path):
    result = run(tmp_path, "dynamics", ["paper_2ion"], time_points=11)
    assert result.summary["duration_s"] == pytest.approx(2 / (2**0.5 * 1310.0))


def test_couplings_with_alpha_scan(tmp_path):
    result = run(tmp_path, "couplings", couplings={"scan_points": 5})
    scan = read_csv(result.directory / "alpha_scan.csv")

    assert len(scan) == 5
    assert [float(r["alpha"]) for r in scan] == sorted(float(r["alpha"]) for r in scan)
    assert result.summary["alpha"] == pytest.approx(0.36, abs=0.01)
    assert result.summary["alpha_adjacent"] == pytest.approx(result.summary["alpha"], rel=1e-9)
    report = read_json(result.directory / "couplings.json")
    assert report["source"] == "physics"
    assert report["fit_adjacent"]["alpha"] == pytest.approx(0.36, abs=0.01)


def test_parity_scan_after_evolution(tmp_path, transfer_time):
    result = run(tmp_path, "parity_scan", ["paper_2ion"], evolve_time=transfer_time)
    fit = read_json(result.directory / "fit.json")

    assert fit["amplitude"] == pytest.approx(1.0, abs=1e-6)
    assert fit["sign"] == 1
    assert fit["witness"]["violated"] is True
    assert len(read_csv(result.directory / "parity.csv")) == 25


def test_witness_vs_time(tmp_path):
    result = run(tmp_path, "witness_vs_time", ["paper_2ion"], time_points=5)
    rows = read_csv(result.directory / "witness.csv")

    assert len(rows) == 5
    assert rows[0]["violated"] == "false"
    assert result.summary["violations"] >= 1


def test_adiabatic(tmp_path):
    result = run(tmp_path, "adiabatic", ["paper_2ion", "paper_ramp"], time_points=11)
    report = read_json(result.directory / "adiabatic.json")

    assert report["start_overlap_all_zero"] == pytest.approx(0.991, abs=0.005)
    assert report["symmetry"]["sector"] == [1, 1]
    assert len(read_csv(result.directory / "trajectory.csv")) == 11


def test_symmetry_sweep(tmp_path):
    result = run(tmp_path, "symmetry_sweep", ["alpha036"])
    rows = read_csv(result.directory / "sweep.csv")

    assert list(rows[0]) == ["d_hz", "e_ss_hz", "e_sa_hz", "e_as_hz", "e_aa_hz"]
    assert len(rows) == 41
    assert result.summary["crossing_hz"] == pytest.approx(84.516, abs=1e-3)
    assert result.summary["symmetric"] is True


def test_symmetry_sweep_without_symmetry(tmp_path):
    shifts = [[0.0, 0.0], [200.0, 150.0], [0.0, 0.0]]
    result = run(tmp_path, "symmetry_sweep", ["alpha036"], chain={"site_shifts": shifts})
    assert result.summary["symmetric"] is False


def test_manifest_lists_outputs(tmp_path):
    result = run(tmp_path, "modes", seed=11)
    manifest = read_json(result.directory / "manifest.json")

    assert manifest["seed"] == 11
    assert set(manifest["files"]) == {"modes.csv", "modes.json"}
    assert msgspec.convert(manifest["config"], ExperimentConfig) == load_config(
        overrides={"experiment": "modes", "seed": 11}
    )


@pytest.mark.slow
def test_full_vs_effective(tmp_path):
    result = run(
        tmp_path,
        "full_vs_effective",
        chain={"n_ions": 2},
        full={"detuning_ratios": [10.0, 40.0], "points": 31},
    )
    rows = read_csv(result.directory / "comparison.csv")
    assert [float(r["detuning_ratio"]) for r in rows] == [10.0, 40.0]
    assert float(rows[1]["max_discrepancy"]) < float(rows[0]["max_discrepancy"])
