"""Command line entry point: `sim <experiment> [--config FILE] [--preset NAME]...`."""

from __future__ import annotations

import logging
import os
import typing
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Union

import cappa
from rich.logging import RichHandler
from rich.table import Table
from typing_extensions import Annotated

from xychain.config import load_config
from xychain.errors import SimulationError
from xychain.experiments import RunResult, run_experiment
from xychain.output import Output
from xychain.presets import list_presets

__all__ = [
    "ExperimentCommand",
    "ListPresets",
    "Sim",
    "console",
    "main",
]

log = logging.getLogger(__name__)

_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def console(sim: Sim) -> Output:
    """Route package logging to the error console at the requested verbosity."""
    output = Output()
    logger = logging.getLogger("xychain")
    for handler in [h for h in logger.handlers if isinstance(h, RichHandler)]:
        logger.removeHandler(handler)

    handler = RichHandler(console=output.error_console, show_path=False)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(_LEVELS[min(sim.verbose, len(_LEVELS) - 1)])
    return output


def run_command(command: ExperimentCommand, output: Output) -> RunResult:
    overrides = {
        "experiment": command.experiment,
        "seed": command.seed,
        "output": command.out,
    }
    try:
        config = load_config(command.config, command.preset, overrides)
        result = run_experiment(config, threads=command.threads or os.cpu_count())
    except SimulationError as e:
        output.error(e)
        raise cappa.Exit(code=e.exit_code) from e

    output.summary(config.experiment, result.summary)
    output.output(
        f"[xychain.path]{len(result.manifest.files)} files written to {result.directory}[/]"
    )
    return result


@dataclass
class ExperimentCommand:
    """Options shared by every experiment.

    Arguments:
        config: TOML config file. Its values override presets; flags override it.
        seed: Root seed for sampled quantities.
        out: Output directory.
        preset: Named preset applied beneath the config file; may be repeated.
        threads: Worker threads for parallel scans (0 uses every core).
    """

    experiment: typing.ClassVar[str | None] = None

    config: Annotated[Union[Path, None], cappa.Arg(long=True)] = None
    seed: Annotated[Union[int, None], cappa.Arg(long=True)] = None
    out: Annotated[Union[str, None], cappa.Arg(long=True)] = None
    preset: Annotated[list[str], cappa.Arg(long=True)] = field(default_factory=list)
    threads: Annotated[
        int, cappa.Arg(long=True, default=cappa.Env("XYCHAIN_THREADS", default="0"))
    ] = 0

    def __call__(self, output: Annotated[Output, cappa.Dep(console)]) -> RunResult:
        return run_command(self, output)


@cappa.command(name="run")
@dataclass
class Run(ExperimentCommand):
    """Run the experiment named by the `experiment` field of the config."""


@cappa.command(name="modes")
@dataclass
class Modes(ExperimentCommand):
    """Equilibrium positions, transverse modes and Lamb-Dicke factors."""

    experiment = "modes"


@cappa.command(name="couplings")
@dataclass
class Couplings(ExperimentCommand):
    """Spin-spin couplings, spin-phonon shifts and power-law fits."""

    experiment = "couplings"


@cappa.command(name="dynamics")
@dataclass
class Dynamics(ExperimentCommand):
    """Population dynamics under the effective spin Hamiltonian."""

    experiment = "dynamics"


@cappa.command(name="parity_scan")
@dataclass
class ParityScan(ExperimentCommand):
    """Parity against analysis phase, with its harmonic fit."""

    experiment = "parity_scan"


@cappa.command(name="witness_vs_time")
@dataclass
class WitnessVsTime(ExperimentCommand):
    """Two-ion entanglement witness along the exchange flop."""

    experiment = "witness_vs_time"


@cappa.command(name="adiabatic")
@dataclass
class Adiabatic(ExperimentCommand):
    """Ramp the (S_z)^2 field down from |00...> and follow the ground state."""

    experiment = "adiabatic"


@cappa.command(name="ground_state_analysis")
@dataclass
class GroundStateAnalysis(ExperimentCommand):
    """Exact ground state, its symmetry sector and AKLT overlaps."""

    experiment = "ground_state_analysis"


@cappa.command(name="symmetry_sweep")
@dataclass
class SymmetrySweep(ExperimentCommand):
    """Lowest energy of each symmetry sector across a (S_z)^2 field sweep."""

    experiment = "symmetry_sweep"


@cappa.command(name="full_vs_effective")
@dataclass
class FullVsEffective(ExperimentCommand):
    """Full spin-phonon evolution against the effective spin model."""

    experiment = "full_vs_effective"


@cappa.command(name="list_presets")
@dataclass
class ListPresets:
    """List the named presets."""

    def __call__(self, output: Annotated[Output, cappa.Dep(console)]) -> list[str]:
        table = Table(title="presets", title_style="xychain.title")
        table.add_column("name", style="xychain.key")
        table.add_column("description")
        presets = list_presets()
        for preset in presets:
            table.add_row(preset.name, preset.description)
        output.output(table)
        return [p.name for p in presets]


@dataclass
class Sim:
    """Simulate trapped-ion spin-1 XY chains.

    Exit codes: 2 for invalid input, 3 for physics-domain errors and 4 for
    numerical failures.

    Arguments:
        verbose: Log progress (-v) or debugging detail (-vv) to stderr.
    """

    command: Annotated[
        Union[
            Run,
            Modes,
            Couplings,
            Dynamics,
            ParityScan,
            WitnessVsTime,
            Adiabatic,
            GroundStateAnalysis,
            SymmetrySweep,
            FullVsEffective,
            ListPresets,
        ],
        cappa.Subcommand,
    ]
    verbose: Annotated[int, cappa.Arg(short="-v", long=True, count=True)] = 0


def _version() -> str:
    try:
        return metadata.version("xychain")
    except metadata.PackageNotFoundError:
        return "unknown"


def main(argv: list[str] | None = None):
    cappa.invoke(Sim, argv=argv, version=_version())


if __name__ == "__main__":
    main()
