"""Experiment configuration: TOML documents decoded into validated structs.

Values are resolved in order: built-in defaults, then presets, then the file,
then command-line overrides.
"""

from __future__ import annotations

import logging
import tomllib
import typing
from pathlib import Path

import msgspec
import numpy as np
from numpy.typing import NDArray
from typing_extensions import Annotated

from xychain.couplings import CouplingSet, derive_couplings, power_law_couplings, tune_alpha
from xychain.dynamics import DEFAULT_NBAR, RampProfile, RampShape
from xychain.errors import ConfigurationError
from xychain.ionchain import (
    DEFAULT_MU_DETUNING,
    RAMAN_355NM_DELTA_K,
    YB171_MASS,
    ChainSpec,
)
from xychain.presets import get_preset
from xychain.protocol import DetectionMapping, MeasurementConfig
from xychain.quantum import BASIS_CAP, ReferenceName

__all__ = [
    "EXPERIMENTS",
    "ChainConfig",
    "CouplingConfig",
    "ExperimentConfig",
    "ExperimentName",
    "FullModelConfig",
    "MeasurementSection",
    "RampConfig",
    "SweepConfig",
    "load_config",
    "merge",
    "resolved",
]

log = logging.getLogger(__name__)

ExperimentName = typing.Literal[
    "modes",
    "couplings",
    "dynamics",
    "parity_scan",
    "witness_vs_time",
    "adiabatic",
    "ground_state_analysis",
    "symmetry_sweep",
    "full_vs_effective",
]
EXPERIMENTS: tuple[str, ...] = typing.get_args(ExperimentName)

Positive = Annotated[float, msgspec.Meta(gt=0)]
NonNegative = Annotated[float, msgspec.Meta(ge=0)]


class _Section(msgspec.Struct, kw_only=True, forbid_unknown_fields=True):
    pass


class ChainConfig(_Section):
    n_ions: Annotated[int, msgspec.Meta(ge=1, le=BASIS_CAP)] = 3
    axial_freq: Positive = 1.0e6
    transverse_com_freq: Positive = 4.8e6
    ion_mass: Positive = YB171_MASS
    delta_k: NonNegative = RAMAN_355NM_DELTA_K
    rabi_freqs: float | list[float] = 30.0e3
    mu_detuning: Positive = DEFAULT_MU_DETUNING
    target_alpha: Annotated[float, msgspec.Meta(ge=0.05, le=3.0)] | None = None
    d_field: float = 0.0
    site_shifts: list[tuple[float, float]] | None = None

    def to_spec(self) -> ChainSpec:
        """Build the chain, tuning the beatnote first when `target_alpha` is set."""
        spec = ChainSpec(
            n_ions=self.n_ions,
            axial_freq=self.axial_freq,
            transverse_com_freq=self.transverse_com_freq,
            ion_mass=self.ion_mass,
            delta_k=self.delta_k,
            rabi_freqs=(
                tuple(self.rabi_freqs) if isinstance(self.rabi_freqs, list) else self.rabi_freqs
            ),
            mu_detuning=self.mu_detuning,
            d_field=self.d_field,
            site_shifts=None if self.site_shifts is None else tuple(self.site_shifts),
        )
        if self.target_alpha is None:
            return spec

        mu = tune_alpha(spec, self.target_alpha)
        log.info("tuned beatnote to %.3f Hz for alpha=%s", mu, self.target_alpha)
        return msgspec.structs.replace(self, target_alpha=None, mu_detuning=mu).to_spec()


class CouplingConfig(_Section):
    """Where the spin-spin couplings come from.

    `physics` derives them from the chain, `power_law` uses j0 / |i - j|^alpha
    and `matrix` takes an explicit symmetric J matrix in Hz. With `scan_points`
    the couplings experiment also scans the fitted alpha across the beatnote bracket.
    """

    source: typing.Literal["physics", "power_law", "matrix"] = "physics"
    j0: float = 1000.0
    alpha: NonNegative = 1.0
    matrix: list[list[float]] | None = None
    include_v_terms: bool = False
    nbar: NonNegative = DEFAULT_NBAR
    scan_points: Annotated[int, msgspec.Meta(ge=0)] = 0

    def build(self, spec: ChainSpec) -> CouplingSet:
        if self.source == "physics":
            return derive_couplings(spec)
        if self.source == "power_law":
            return power_law_couplings(spec.n_ions, self.j0, self.alpha)

        if self.matrix is None:
            raise ConfigurationError(
                "source 'matrix' needs a matrix", context="couplings.matrix"
            )
        j_matrix = np.asarray(self.matrix, dtype=float)
        if j_matrix.shape != (spec.n_ions, spec.n_ions):
            raise ConfigurationError(
                f"matrix has shape {j_matrix.shape}, expected ({spec.n_ions}, {spec.n_ions})",
                context="couplings.matrix",
            )
        if not np.allclose(j_matrix, j_matrix.T, rtol=0, atol=1e-12):
            raise ConfigurationError("matrix must be symmetric", context="couplings.matrix")
        if np.any(np.diag(j_matrix) != 0):
            raise ConfigurationError("matrix diagonal must be zero", context="couplings.matrix")
        return CouplingSet(j_matrix=j_matrix, v_matrix=np.zeros_like(j_matrix))


class RampConfig(_Section):
    d0: float
    duration: Positive
    shape: RampShape = "exponential"
    tau: NonNegative = 0.0
    d_end: float = 0.0
    table: list[tuple[float, float]] = msgspec.field(default_factory=list)

    def to_profile(self) -> RampProfile:
        return RampProfile(
            d0=self.d0,
            duration=self.duration,
            shape=self.shape,
            tau=self.tau,
            d_end=self.d_end,
            table=tuple(self.table),
        )


class MeasurementSection(_Section):
    sequence: typing.Literal["entanglement", "ground"] = "entanglement"
    mapping: DetectionMapping = "none"
    shots: Annotated[int, msgspec.Meta(ge=1)] | None = None
    rabi_noise_rel: NonNegative = 0.0
    noise_draws: Annotated[int, msgspec.Meta(ge=1)] = 64
    phi_points: Annotated[int, msgspec.Meta(ge=3)] = 25

    def to_config(self, seed: int) -> MeasurementConfig:
        return MeasurementConfig(
            mapping=self.mapping,
            shots=self.shots,
            seed=seed,
            rabi_noise_rel=self.rabi_noise_rel,
            noise_draws=self.noise_draws,
        )

    def phi_grid(self) -> NDArray[np.float64]:
        """Analysis phases over one period of the fitted harmonic."""
        period = np.pi if self.sequence == "entanglement" else 2 * np.pi
        return np.linspace(0, period, self.phi_points, endpoint=False)


class SweepConfig(_Section):
    d_min: float = 0.0
    d_max: float = 200.0
    d_points: Annotated[int, msgspec.Meta(ge=2)] = 41

    def d_values(self) -> NDArray[np.float64]:
        return np.linspace(self.d_min, self.d_max, self.d_points)


class FullModelConfig(_Section):
    detuning_ratios: list[Positive] = msgspec.field(default_factory=lambda: [10.0, 20.0, 40.0])
    n_max: Annotated[int, msgspec.Meta(ge=1)] = 3
    nbar: NonNegative = 0.0
    points: Annotated[int, msgspec.Meta(ge=2)] = 201
    periods: Positive = 1.0


class ExperimentConfig(_Section):
    """Fully resolved description of one run.

    Arguments:
        experiment: Which experiment to run.
        presets: Presets applied underneath the file values, in order.
        state: Initial (or analysed) reference state.
        evolve_time: For `parity_scan`, evolve `state` for this long first.
        times: Explicit sample times in seconds.
        duration: Evenly spaced samples over [0, duration] when `times` is unset.
        time_points: Number of evenly spaced samples.
        seed: Root seed for every sampled quantity.
        output: Output directory.
    """

    experiment: ExperimentName
    presets: list[str] = msgspec.field(default_factory=list)
    chain: ChainConfig = msgspec.field(default_factory=ChainConfig)
    couplings: CouplingConfig = msgspec.field(default_factory=CouplingConfig)
    state: ReferenceName = "all_zero"
    evolve_time: NonNegative | None = None
    times: list[NonNegative] | None = None
    duration: Positive | None = None
    time_points: Annotated[int, msgspec.Meta(ge=2)] = 101
    ramp: RampConfig | None = None
    measurement: MeasurementSection = msgspec.field(default_factory=MeasurementSection)
    sweep: SweepConfig = msgspec.field(default_factory=SweepConfig)
    full: FullModelConfig = msgspec.field(default_factory=FullModelConfig)
    seed: Annotated[int, msgspec.Meta(ge=0)] = 0
    output: str = "results"

    def time_grid(self, default_duration: float) -> NDArray[np.float64]:
        if self.times is not None:
            return np.asarray(self.times, dtype=float)
        return np.linspace(0.0, self.duration or default_duration, self.time_points)


def merge(base: dict[str, typing.Any], update: typing.Mapping[str, typing.Any]) -> dict[str, typing.Any]:
    """Nested update: tables merge key by key, everything else is replaced.

    Examples:
        >>> merge({"chain": {"n_ions": 3, "d_field": 1.0}}, {"chain": {"n_ions": 2}})
        {'chain': {'n_ions': 2, 'd_field': 1.0}}
    """
    result = dict(base)
    for key, value in update.items():
        if isinstance(value, typing.Mapping) and isinstance(result.get(key), dict):
            result[key] = merge(result[key], value)
        elif isinstance(value, typing.Mapping):
            result[key] = merge({}, value)
        else:
            result[key] = value
    return result


def _read(path: Path) -> dict[str, typing.Any]:
    try:
        with path.open("rb") as f:
            return tomllib.load(f)
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e.strerror}", context="config") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path} is not valid TOML: {e}", context="config") from e


def load_config(
    path: Path | str | None = None,
    presets: typing.Sequence[str] = (),
    overrides: typing.Mapping[str, typing.Any] | None = None,
) -> ExperimentConfig:
    """Resolve and validate a config from a file, presets and overrides.

    Presets named in the file come first, followed by `presets`.

    Examples:
        >>> config = load_config(presets=["paper_2ion"], overrides={"experiment": "dynamics"})
        >>> config.chain.n_ions, config.couplings.j0
        (2, 1310.0)
    """
    document = _read(Path(path)) if path is not None else {}
    names = [*document.get("presets", []), *presets]

    raw: dict[str, typing.Any] = {}
    for name in names:
        raw = merge(raw, get_preset(name).values)
    raw = merge(raw, document)
    raw = merge(raw, {k: v for k, v in (overrides or {}).items() if v is not None})
    raw["presets"] = list(dict.fromkeys(names))

    try:
        return msgspec.convert(raw, ExperimentConfig)
    except msgspec.ValidationError as e:
        raise ConfigurationError(str(e), context="config") from e


def resolved(config: ExperimentConfig) -> dict[str, typing.Any]:
    """Plain-data echo of `config`; converting it back gives an equal config."""
    return msgspec.to_builtins(config)
