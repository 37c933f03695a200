"""End-to-end experiments: each runner reads a resolved config and writes its artifacts."""

from __future__ import annotations

import logging
import math
import time
import typing
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from xychain.config import ExperimentConfig, resolved
from xychain.couplings import CouplingSet, alpha_scan, mu_bracket
from xychain.dynamics import (
    SECTORS,
    EffectiveHamiltonian,
    PhononState,
    SymmetryReport,
    adiabatic_prepare,
    build_effective,
    evolve_many,
    full_vs_effective,
    ground_state,
    symmetry_diagnosis,
)
from xychain.errors import ConfigurationError
from xychain.ionchain import ChainSpec, transverse_modes
from xychain.output import ArtifactWriter, RunManifest
from xychain.protocol import (
    entanglement_sequence,
    entanglement_vs_time,
    ground_state_sequence,
    parity_scan,
    witness,
)
from xychain.quantum import SpinState, aklt_overlaps, reference_state

__all__ = [
    "RUNNERS",
    "RunContext",
    "RunResult",
    "run_experiment",
]

log = logging.getLogger(__name__)


@dataclass
class RunContext:
    config: ExperimentConfig
    writer: ArtifactWriter
    threads: int | None = None

    def spec(self) -> ChainSpec:
        return self.config.chain.to_spec()

    def couplings(self, spec: ChainSpec) -> CouplingSet:
        return self.config.couplings.build(spec)

    def initial_state(self, n_sites: int) -> SpinState:
        return reference_state(self.config.state, n_sites)


@dataclass
class RunResult:
    directory: Path
    summary: dict[str, typing.Any]
    manifest: RunManifest


Runner = typing.Callable[[RunContext], dict[str, typing.Any]]


def _flop_period(coupling: CouplingSet) -> float:
    j_max = float(np.max(np.abs(coupling.j_matrix), initial=0.0))
    if j_max == 0:
        raise ConfigurationError(
            "couplings vanish; set `times` or `duration` explicitly", context="times"
        )
    return 1 / (math.sqrt(2) * j_max)


def _sector_columns(state: SpinState) -> np.ndarray:
    """Basis indices sharing an S_z value with some component of `state`."""
    occupied = np.unique(state.basis.sz_total[np.abs(state.amplitudes) > 0])
    return np.flatnonzero(np.isin(state.basis.sz_total, occupied))


def _symmetry_summary(report: SymmetryReport) -> dict[str, typing.Any]:
    return {
        "inversion": report.inversion_expectation,
        "rotation": report.rotation_expectation,
        "sector": [report.inversion_eigenvalue, report.rotation_eigenvalue],
        "inversion_commutator": report.inversion_commutator,
        "rotation_commutator": report.rotation_commutator,
    }


def run_modes(ctx: RunContext) -> dict[str, typing.Any]:
    spec = ctx.spec()
    modes = transverse_modes(spec)

    ctx.writer.write_json("modes.json", {"chain_n_ions": spec.n_ions, **modes.to_dict()})
    ctx.writer.write_csv(
        "modes.csv",
        ["mode", "frequency_hz", *(f"eta_ion{i + 1}" for i in range(spec.n_ions))],
        [
            [m, modes.mode_freqs[m], *modes.lamb_dicke[:, m]]
            for m in range(modes.n_modes)
        ],
    )
    return {
        "modes": modes.n_modes,
        "com_frequency_hz": modes.mode_freqs[0],
        "orthogonality_residual": modes.orthogonality_residual(),
    }


def run_couplings(ctx: RunContext) -> dict[str, typing.Any]:
    spec = ctx.spec()
    coupling = ctx.couplings(spec)

    ctx.writer.write_json(
        "couplings.json",
        {"mu_detuning_hz": spec.mu_detuning, "source": ctx.config.couplings.source, **coupling.to_dict()},
    )
    ctx.writer.write_csv("pairs.csv", ["i", "j", "distance", "j_hz"], coupling.pairs())
    summary: dict[str, typing.Any] = {"pairs": len(coupling.pairs()), "uniformity": coupling.uniformity}
    if coupling.power_law is not None:
        summary["alpha"] = coupling.power_law.alpha
        summary["j0_hz"] = coupling.power_law.j0
    if coupling.adjacent is not None:
        summary["alpha_adjacent"] = coupling.adjacent.alpha

    points = ctx.config.couplings.scan_points
    if points and ctx.config.couplings.source == "physics":
        modes = transverse_modes(spec)
        low, high = mu_bracket(spec, modes)
        com = float(modes.mode_freqs[0])
        mus = com + np.geomspace(low - com, high - com, points)
        alphas = alpha_scan(spec, mus, threads=ctx.threads, modes=modes)
        ctx.writer.write_csv("alpha_scan.csv", ["mu_hz", "alpha"], zip(mus, alphas))
        ctx.writer.write_gnuplot("alpha_scan.gp", "alpha_scan.csv", ["mu_hz", "alpha"])
        summary["alpha_range"] = f"{alphas.min():.4f} .. {alphas.max():.4f}"
    return summary


def _effective(ctx: RunContext, spec: ChainSpec, coupling: CouplingSet) -> EffectiveHamiltonian:
    couplings = ctx.config.couplings
    ramp = ctx.config.ramp.to_profile() if ctx.config.ramp is not None else None
    return build_effective(
        coupling, spec, couplings.include_v_terms, nbar=couplings.nbar, ramp=ramp
    )


def run_dynamics(ctx: RunContext) -> dict[str, typing.Any]:
    spec = ctx.spec()
    coupling = ctx.couplings(spec)
    hamiltonian = _effective(ctx, spec, coupling)
    start = ctx.initial_state(spec.n_ions)

    explicit = ctx.config.times is not None or ctx.config.duration is not None
    times = ctx.config.time_grid(0.0 if explicit else 2 * _flop_period(coupling))
    states = evolve_many(start, hamiltonian, times)

    columns = _sector_columns(start)
    labels = [start.basis.label(i) for i in columns]
    rows = [
        [t, s.norm, hamiltonian.at(float(t)).expectation(s).real, *s.populations()[columns]]
        for t, s in zip(times, states)
    ]
    header = ["time_s", "norm", "energy_hz", *labels]
    ctx.writer.write_csv("populations.csv", header, rows)
    ctx.writer.write_gnuplot("populations.gp", "populations.csv", ["time_s", *labels])

    norms = np.array([s.norm for s in states])
    return {
        "samples": len(times),
        "duration_s": times[-1],
        "norm_drift": float(np.max(np.abs(norms - 1))),
    }


def run_parity_scan(ctx: RunContext) -> dict[str, typing.Any]:
    spec = ctx.spec()
    measurement = ctx.config.measurement
    state = ctx.initial_state(spec.n_ions)
    if ctx.config.evolve_time:
        hamiltonian = _effective(ctx, spec, ctx.couplings(spec))
        state = evolve_many(state, hamiltonian, [ctx.config.evolve_time])[0]

    if measurement.sequence == "entanglement":
        sequence, harmonic = entanglement_sequence, 2
    else:
        sequence, harmonic = ground_state_sequence, 1

    config = measurement.to_config(ctx.config.seed)
    curve = parity_scan(state, sequence, measurement.phi_grid(), config, harmonic=harmonic)
    ctx.writer.write_csv("parity.csv", ["phi_rad", "parity", "stderr"], curve.rows())
    ctx.writer.write_gnuplot("parity.gp", "parity.csv", ["phi_rad", "parity"])

    fit = {
        "sequence": measurement.sequence,
        "harmonic": harmonic,
        "offset": curve.offset,
        "amplitude": curve.amplitude,
        "sign": curve.sign,
        "phase": curve.phase,
        "residual": curve.residual,
        "shots": curve.shots,
    }
    if spec.n_ions == 2 and measurement.sequence == "entanglement":
        report = witness(curve, state=state if config.exact else None)
        fit["witness"] = {"lhs": report.lhs, "margin": report.margin, "violated": report.violated}
    ctx.writer.write_json("fit.json", fit)
    return {k: v for k, v in fit.items() if k != "witness"}


def run_witness_vs_time(ctx: RunContext) -> dict[str, typing.Any]:
    spec = ctx.spec()
    coupling = ctx.couplings(spec)
    measurement = ctx.config.measurement
    times = ctx.config.time_grid(_flop_period(coupling))

    points = entanglement_vs_time(
        spec,
        coupling,
        times,
        measurement.to_config(ctx.config.seed),
        phi_grid=measurement.phi_grid(),
        include_v_terms=ctx.config.couplings.include_v_terms,
    )
    ctx.writer.write_csv(
        "witness.csv",
        ["time_s", "offset", "amplitude", "lhs", "margin", "violated"],
        [
            [p.time, p.curve.offset, p.curve.amplitude, p.report.lhs, p.report.margin, p.report.violated]
            for p in points
        ],
    )
    ctx.writer.write_gnuplot("witness.gp", "witness.csv", ["time_s", "offset", "amplitude", "lhs"])

    best = max(points, key=lambda p: p.report.lhs)
    return {
        "samples": len(points),
        "max_lhs": best.report.lhs,
        "max_lhs_time_s": best.time,
        "violations": sum(p.report.violated for p in points),
    }


def run_adiabatic(ctx: RunContext) -> dict[str, typing.Any]:
    if ctx.config.ramp is None:
        raise ConfigurationError("the adiabatic experiment needs a [ramp] table", context="ramp")
    spec = ctx.spec()
    ramp = ctx.config.ramp.to_profile()
    result = adiabatic_prepare(
        spec,
        ctx.couplings(spec),
        ramp,
        samples=ctx.config.time_points,
        include_v_terms=ctx.config.couplings.include_v_terms,
        nbar=ctx.config.couplings.nbar,
    )

    trajectory = result.trajectory
    columns = _sector_columns(trajectory.states[0])
    labels = [trajectory.final.basis.label(i) for i in columns]
    rows = [
        [t, ramp.value(float(t)), f, n, e, *s.populations()[columns]]
        for t, f, n, e, s in zip(
            trajectory.times, trajectory.fidelities, trajectory.norms, trajectory.energies, trajectory.states
        )
    ]
    ctx.writer.write_csv(
        "trajectory.csv", ["time_s", "d_hz", "ground_fidelity", "norm", "energy_hz", *labels], rows
    )
    ctx.writer.write_gnuplot("trajectory.gp", "trajectory.csv", ["time_s", "ground_fidelity", *labels])

    report = {
        "start_overlap_all_zero": result.start_overlap_all_zero,
        "final_fidelity": result.final_fidelity,
        "symmetric_fidelity": result.symmetric_fidelity,
        "final_ground_energy_hz": result.final_ground.energy,
        "final_ground_degenerate": result.final_ground.degenerate,
        "symmetry": _symmetry_summary(result.symmetry),
        "final_state": result.final_state.records(),
    }
    if spec.n_ions == 3:
        report["eq10_fidelity"] = reference_state("eq10_ground").fidelity(result.final_state)
    ctx.writer.write_json("adiabatic.json", report)
    return {k: report[k] for k in ("start_overlap_all_zero", "final_fidelity", "symmetric_fidelity")}


def run_ground_state_analysis(ctx: RunContext) -> dict[str, typing.Any]:
    spec = ctx.spec()
    hamiltonian = _effective(ctx, spec, ctx.couplings(spec))
    ground = ground_state(hamiltonian)
    if ground.degenerate:
        log.warning("ground state is %d-fold degenerate; reporting the first member", len(ground.multiplet))

    state = ground.state
    probabilities = state.populations()
    occupied = np.flatnonzero(probabilities > 1e-12)
    ctx.writer.write_csv(
        "probabilities.csv",
        ["label", "probability"],
        [[state.basis.label(i), probabilities[i]] for i in occupied],
    )

    report: dict[str, typing.Any] = {
        "energy_hz": ground.energy,
        "degenerate": ground.degenerate,
        "multiplet": len(ground.multiplet),
        "sz_sectors": {str(k): v for k, v in state.sector_populations().items() if v > 1e-12},
        "symmetry": _symmetry_summary(symmetry_diagnosis(hamiltonian, state)),
        "state": state.records(),
    }
    if spec.n_ions == 3:
        report["eq10_fidelity"] = reference_state("eq10_ground").fidelity(state)
        report["aklt_overlaps"] = aklt_overlaps(state)
    ctx.writer.write_json("ground_state.json", report)
    return {
        "energy_hz": ground.energy,
        "degenerate": ground.degenerate,
        **({"eq10_fidelity": report["eq10_fidelity"]} if "eq10_fidelity" in report else {}),
    }


def run_symmetry_sweep(ctx: RunContext) -> dict[str, typing.Any]:
    spec = ctx.spec()
    hamiltonian = _effective(ctx, spec, ctx.couplings(spec))
    sweep_config = ctx.config.sweep
    state = ground_state(hamiltonian, 0).state
    report = symmetry_diagnosis(hamiltonian, state, sweep_config.d_values())
    sweep = report.sweep
    assert sweep is not None

    sector_names = [f"e_{'s' if a > 0 else 'a'}{'s' if b > 0 else 'a'}_hz" for a, b in SECTORS]
    ctx.writer.write_csv(
        "sweep.csv",
        ["d_hz", *sector_names],
        [[d, *(sweep.energies[key][k] for key in SECTORS)] for k, d in enumerate(sweep.d_values)],
    )
    ctx.writer.write_gnuplot("sweep.gp", "sweep.csv", ["d_hz", *sector_names])
    ctx.writer.write_json(
        "symmetry.json",
        {
            **_symmetry_summary(report),
            "symmetric": report.symmetric,
            "crossing_hz": sweep.crossing,
            "inter_sector_coupling": sweep.inter_sector_coupling,
        },
    )
    return {
        "symmetric": report.symmetric,
        "crossing_hz": sweep.crossing,
        "inter_sector_coupling": sweep.inter_sector_coupling,
    }


def run_full_vs_effective(ctx: RunContext) -> dict[str, typing.Any]:
    spec = ctx.spec()
    full = ctx.config.full
    rows = []
    for ratio in full.detuning_ratios:
        result = full_vs_effective(
            spec,
            ratio,
            n_max=full.n_max,
            phonons=PhononState(full.nbar),
            n_points=full.points,
            periods=full.periods,
        )
        rows.append([ratio, result.max_discrepancy, result.top_level_population, result.truncation_flagged])
        log.info("detuning ratio %s: max discrepancy %.4g", ratio, result.max_discrepancy)

    ctx.writer.write_csv(
        "comparison.csv",
        ["detuning_ratio", "max_discrepancy", "top_level_population", "truncation_flagged"],
        rows,
    )
    return {f"ratio_{format(r[0], 'g')}": r[1] for r in rows}


RUNNERS: dict[str, Runner] = {
    "modes": run_modes,
    "couplings": run_couplings,
    "dynamics": run_dynamics,
    "parity_scan": run_parity_scan,
    "witness_vs_time": run_witness_vs_time,
    "adiabatic": run_adiabatic,
    "ground_state_analysis": run_ground_state_analysis,
    "symmetry_sweep": run_symmetry_sweep,
    "full_vs_effective": run_full_vs_effective,
}


def run_experiment(
    config: ExperimentConfig,
    *,
    threads: int | None = None,
    directory: Path | str | None = None,
) -> RunResult:
    """Run `config.experiment`, then write `manifest.json` next to its outputs."""
    directory = Path(directory if directory is not None else config.output)
    writer = ArtifactWriter(directory)
    started = time.perf_counter()

    log.info("running %s into %s", config.experiment, directory)
    summary = RUNNERS[config.experiment](RunContext(config, writer, threads))

    manifest = RunManifest.build(
        resolved(config),
        seed=config.seed,
        wall_time=time.perf_counter() - started,
        files=writer.digests,
    )
    writer.write_json("manifest.json", manifest, exact=True)
    return RunResult(directory, summary, manifest)
