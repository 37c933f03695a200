"""Measurement layer: global rotations, bright/dark detection, parity curves and the qutrit witness."""

from __future__ import annotations

import logging
import math
import typing
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from xychain.couplings import CouplingSet
from xychain.dynamics import build_effective, evolve_many
from xychain.errors import ConfigurationError, FitError, NormalizationError
from xychain.ionchain import ChainSpec
from xychain.quantum import SpinState, build_basis, reference_state

__all__ = [
    "Detection",
    "EntanglementPoint",
    "MeasurementConfig",
    "ParityCurve",
    "RotationPulse",
    "WitnessReport",
    "apply_rotation",
    "apply_sequence",
    "detect",
    "entanglement_sequence",
    "entanglement_vs_time",
    "fit_parity",
    "ground_state_sequence",
    "parity",
    "parity_scan",
    "random_separable_state",
    "witness",
]

log = logging.getLogger(__name__)

Transition = typing.Literal["zero_plus", "zero_minus"]
DetectionMapping = typing.Literal["none", "pi_plus", "pi_minus"]
SequenceTemplate = typing.Callable[[float], list["RotationPulse"]]

NORMALIZATION_TOLERANCE: float = 1e-9
WITNESS_TOLERANCE: float = 1e-9

# Site digit of the bright state each transition couples to |0>.
_PARTNER = {"zero_plus": 2, "zero_minus": 0}


@dataclass(frozen=True)
class RotationPulse:
    """Global rotation exp((i theta / 2) sum_k [e^{+-i phi} |+-><0|_k + h.c.])."""

    transition: Transition
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if self.transition not in _PARTNER:
            raise ConfigurationError(
                f"unknown transition {self.transition!r}", context="RotationPulse"
            )
        if not 0 <= self.theta <= 2 * math.pi:
            raise ConfigurationError(
                f"theta must lie in [0, 2 pi], got {self.theta}", context="RotationPulse"
            )

    def local_unitary(self, theta_scale: float = 1.0) -> NDArray[np.complex128]:
        """Single-site 3x3 unitary in the (-, 0, +) basis."""
        partner = _PARTNER[self.transition]
        sign = 1 if self.transition == "zero_plus" else -1
        half = self.theta * theta_scale / 2

        generator = np.zeros((3, 3), dtype=complex)
        generator[partner, 1] = np.exp(1j * sign * self.phi)
        generator[1, partner] = np.exp(-1j * sign * self.phi)

        projector = np.zeros((3, 3))
        projector[1, 1] = projector[partner, partner] = 1

        return np.eye(3) + (math.cos(half) - 1) * projector + 1j * math.sin(half) * generator


def _apply_local(state: SpinState, unitary: NDArray[np.complex128]) -> SpinState:
    n = state.basis.n_sites
    tensor = state.amplitudes.reshape((3,) * n + (-1,))
    for site in range(n):
        tensor = np.moveaxis(np.tensordot(unitary, tensor, axes=([1], [site])), 0, site)
    return state.with_amplitudes(tensor.reshape(-1))


def apply_rotation(
    state: SpinState, pulse: RotationPulse, *, theta_scale: float = 1.0
) -> SpinState:
    """Apply `pulse` to every site at once.

    Examples:
        >>> zero = reference_state("all_zero", 1)
        >>> flipped = apply_rotation(zero, RotationPulse("zero_plus", math.pi))
        >>> np.round(flipped.amplitudes, 12).tolist()
        [0j, 0j, 1j]
    """
    return _apply_local(state, pulse.local_unitary(theta_scale))


def apply_sequence(
    state: SpinState, pulses: typing.Sequence[RotationPulse], *, theta_scale: float = 1.0
) -> SpinState:
    """Apply `pulses` in list order (the first pulse acts first)."""
    for pulse in pulses:
        state = apply_rotation(state, pulse, theta_scale=theta_scale)
    return state


def entanglement_sequence(phi: float) -> list[RotationPulse]:
    """R0-(pi, 0), then R0+(pi/2, 0), then the analysis pulse R0+(pi/2, phi)."""
    return [
        RotationPulse("zero_minus", math.pi),
        RotationPulse("zero_plus", math.pi / 2),
        RotationPulse("zero_plus", math.pi / 2, phi),
    ]


def ground_state_sequence(phi: float) -> list[RotationPulse]:
    """R0+(pi/2, 0), then R0-(pi/2, phi)."""
    return [
        RotationPulse("zero_plus", math.pi / 2),
        RotationPulse("zero_minus", math.pi / 2, phi),
    ]


@dataclass(frozen=True)
class MeasurementConfig:
    """Detection settings.

    Arguments:
        mapping: Optional pi pulse before detection, moving |+> or |-> onto the dark state.
        shots: Shots per point; None computes exact probabilities.
        seed: Root seed of the counter-based sampler.
        rabi_noise_rel: Relative Gaussian spread of all Rabi frequencies.
        noise_draws: Number of noise realizations averaged when `rabi_noise_rel` is set.
    """

    mapping: DetectionMapping = "none"
    shots: int | None = None
    seed: int = 0
    rabi_noise_rel: float = 0.0
    noise_draws: int = 64

    def __post_init__(self):
        if self.mapping not in ("none", "pi_plus", "pi_minus"):
            raise ConfigurationError(f"unknown mapping {self.mapping!r}", context="measurement.mapping")
        if self.shots is not None and self.shots < 1:
            raise ConfigurationError(
                f"shots must be >= 1, got {self.shots}", context="measurement.shots"
            )
        if self.rabi_noise_rel < 0:
            raise ConfigurationError(
                "rabi_noise_rel must be >= 0", context="measurement.rabi_noise_rel"
            )
        if self.noise_draws < 1:
            raise ConfigurationError("noise_draws must be >= 1", context="measurement.noise_draws")

    @property
    def exact(self) -> bool:
        return self.shots is None

    def generator(self, *key: int) -> np.random.Generator:
        """Independent stream for `key`; identical keys give identical draws."""
        sequence = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(sequence))

    def noise_scales(self, *key: int) -> NDArray[np.float64]:
        if self.rabi_noise_rel == 0:
            return np.ones(1)
        return 1 + self.rabi_noise_rel * self.generator(*key).standard_normal(self.noise_draws)


_MAPPING_PULSES: dict[str, RotationPulse | None] = {
    "none": None,
    "pi_plus": RotationPulse("zero_plus", math.pi),
    "pi_minus": RotationPulse("zero_minus", math.pi),
}


@dataclass(frozen=True, eq=False)
class Detection:
    """Bright/dark outcome statistics.

    Pattern index bit n - i is set when site i is dark, so site 1 is the most
    significant bit.
    """

    n_sites: int
    probabilities: NDArray[np.float64]
    counts: NDArray[np.int64] | None = None

    @property
    def shots(self) -> int | None:
        return None if self.counts is None else int(self.counts.sum())

    def pattern_label(self, pattern: int) -> str:
        return "".join(
            "D" if pattern >> (self.n_sites - 1 - i) & 1 else "B" for i in range(self.n_sites)
        )

    def marginals(self) -> NDArray[np.float64]:
        """P_j: probability of exactly j dark ions."""
        dark = np.array([bin(p).count("1") for p in range(2**self.n_sites)])
        return np.bincount(dark, weights=self.probabilities, minlength=self.n_sites + 1)


def _pattern_probabilities(state: SpinState) -> NDArray[np.float64]:
    n = state.basis.n_sites
    dark = (state.basis.digits == 1).astype(np.int64)
    patterns = dark @ (1 << np.arange(n - 1, -1, -1))
    return np.bincount(patterns, weights=state.populations(), minlength=2**n)


def _mapped_probabilities(state: SpinState, mapping: DetectionMapping, scale: float) -> NDArray[np.float64]:
    pulse = _MAPPING_PULSES[mapping]
    if pulse is not None:
        state = apply_rotation(state, pulse, theta_scale=scale)
    return _pattern_probabilities(state)


def _detection(
    n_sites: int,
    probabilities: NDArray[np.float64],
    config: MeasurementConfig,
    key: typing.Sequence[int],
) -> Detection:
    probabilities = np.clip(probabilities, 0, None)
    probabilities /= probabilities.sum()
    if config.exact:
        return Detection(n_sites, probabilities)

    counts = config.generator(*key).multinomial(config.shots, probabilities)
    return Detection(n_sites, counts / config.shots, counts)


def detect(
    state: SpinState,
    config: MeasurementConfig,
    *,
    key: typing.Sequence[int] = (),
    theta_scales: NDArray[np.float64] | None = None,
) -> Detection:
    """Apply the mapping pulse, then measure every ion as bright or dark.

    With `theta_scales` the distribution is averaged over pulse-area errors.
    In sampling mode the shots are drawn from the stream keyed by `key`.

    Examples:
        >>> detect(reference_state("all_zero", 2), MeasurementConfig()).probabilities.tolist()
        [0.0, 0.0, 0.0, 1.0]
    """
    scales = np.ones(1) if theta_scales is None else theta_scales
    probabilities = sum(_mapped_probabilities(state, config.mapping, s) for s in scales)
    return _detection(state.basis.n_sites, probabilities / len(scales), config, key)


def parity(marginals: typing.Sequence[float]) -> float:
    """Alternating sum over the number of dark ions.

    Examples:
        >>> parity([0.25, 0.5, 0.25])
        0.0
    """
    values = np.asarray(marginals, dtype=float)
    total = float(values.sum())
    if abs(total - 1) > NORMALIZATION_TOLERANCE:
        raise NormalizationError(f"marginals sum to {total!r}, not 1", context="parity")
    signs = (-1.0) ** np.arange(len(values))
    return float(signs @ values)


@dataclass(frozen=True, eq=False)
class ParityCurve:
    """Parity against analysis phase, with a single-harmonic fit.

    The fit reads Pi = C + A cos(k phi - phase) with k = `harmonic` and A >= 0.
    `sign` is +1 when the cos(k phi) coefficient has the conventional sign:
    negative for `harmonic=2`, positive for `harmonic=1`.
    """

    phi_grid: NDArray[np.float64]
    parity_values: NDArray[np.float64]
    harmonic: int
    offset: float
    amplitude: float
    phase: float
    sign: int
    residual: float
    stderr: NDArray[np.float64] = field(repr=False)
    shots: int | None = None

    @property
    def signed_amplitude(self) -> float:
        return self.sign * self.amplitude

    def rows(self) -> list[tuple[float, float, float]]:
        return [
            (float(p), float(v), float(e))
            for p, v, e in zip(self.phi_grid, self.parity_values, self.stderr)
        ]


def fit_parity(
    phi_grid: NDArray[np.float64], values: NDArray[np.float64], harmonic: int
) -> tuple[float, float, float, int, float]:
    """Least-squares (offset, amplitude, phase, sign, rms residual)."""
    if harmonic not in (1, 2):
        raise ConfigurationError(f"harmonic must be 1 or 2, got {harmonic}", context="parity_scan")

    design = np.column_stack(
        [np.ones_like(phi_grid), np.cos(harmonic * phi_grid), np.sin(harmonic * phi_grid)]
    )
    if np.linalg.matrix_rank(design) < 3:
        raise FitError(
            f"{len(phi_grid)} phase points cannot resolve harmonic {harmonic}",
            context="parity_scan",
        )

    (offset, cosine, sine), *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = float(np.sqrt(np.mean((design @ [offset, cosine, sine] - values) ** 2)))

    conventional = -cosine if harmonic == 2 else cosine
    sign = 1 if conventional >= 0 else -1
    amplitude = math.hypot(cosine, sine)
    phase = math.atan2(sine, cosine) if amplitude > 0 else 0.0
    return float(offset), amplitude, phase, sign, residual


def _scan(
    draws: typing.Sequence[tuple[float, SpinState]],
    sequence: SequenceTemplate,
    phis: NDArray[np.float64],
    config: MeasurementConfig,
    harmonic: int,
    run_id: int,
) -> ParityCurve:
    n_sites = draws[0][1].basis.n_sites
    values = np.empty(len(phis))
    for k, phi in enumerate(phis):
        pulses = sequence(float(phi))
        probabilities = sum(
            _mapped_probabilities(
                apply_sequence(state, pulses, theta_scale=scale), config.mapping, scale
            )
            for scale, state in draws
        )
        detection = _detection(n_sites, probabilities / len(draws), config, (run_id, k))
        values[k] = parity(detection.marginals())

    if config.exact:
        stderr = np.zeros_like(values)
    else:
        stderr = np.sqrt(np.clip(1 - values**2, 0, None) / config.shots)

    offset, amplitude, phase, sign, residual = fit_parity(phis, values, harmonic)
    return ParityCurve(
        phi_grid=phis,
        parity_values=values,
        harmonic=harmonic,
        offset=offset,
        amplitude=amplitude,
        phase=phase,
        sign=sign,
        residual=residual,
        stderr=stderr,
        shots=config.shots,
    )


def parity_scan(
    state: SpinState,
    sequence: SequenceTemplate,
    phi_grid: typing.Sequence[float],
    config: MeasurementConfig,
    *,
    harmonic: int = 2,
    run_id: int = 0,
) -> ParityCurve:
    """Parity after `sequence(phi)` for every phi, and its harmonic fit.

    Sampling for phase point k draws from the stream keyed by (run_id, k).
    Rabi noise scales every pulse area by one draw per realization, taken
    from the stream keyed by (run_id,).
    """
    phis = np.asarray(phi_grid, dtype=float)
    draws = [(float(s), state) for s in config.noise_scales(run_id)]
    return _scan(draws, sequence, phis, config, harmonic, run_id)


@dataclass(frozen=True)
class WitnessReport:
    """2A + P00 + 2|rho(+-,00)| + 2|rho(-+,00)| <= 1 holds for separable qutrit pairs."""

    amplitude: float
    p00: float
    rho_pm_00: float
    rho_mp_00: float
    rho_pm_mp: float
    lhs: float
    violated: bool
    margin: float
    conservative: bool = False

    @property
    def amplitude_sufficient(self) -> bool:
        """A > 1/2 violates the inequality whatever the other terms are."""
        return self.amplitude > 0.5 + WITNESS_TOLERANCE


def _two_qutrit_density(source: SpinState | NDArray[np.complex128]) -> NDArray[np.complex128]:
    if isinstance(source, SpinState):
        if source.basis.n_sites != 2:
            raise ConfigurationError(
                f"the witness needs two sites, got {source.basis.n_sites}", context="witness"
            )
        return source.density_matrix()

    rho = np.asarray(source, dtype=complex)
    if rho.shape != (9, 9):
        raise ConfigurationError(f"density matrix must be 9x9, got {rho.shape}", context="witness")
    return rho


def witness(
    source: ParityCurve | float | SpinState | NDArray[np.complex128],
    *,
    state: SpinState | NDArray[np.complex128] | None = None,
) -> WitnessReport:
    """Evaluate the separability inequality.

    The amplitude comes from a fitted curve, a bare number, or (for an exact
    state or density matrix) from P+- + P-+ + 2|rho(+-,-+)| halved. Population
    and coherence terms come from `state` (or the exact source) when given and
    are otherwise taken as 0, which can only understate the left-hand side.

    Examples:
        >>> report = witness(0.86)
        >>> round(report.lhs, 12), report.violated, round(report.margin, 12)
        (1.72, True, 0.72)
    """
    basis = build_basis(2)
    pm, mp, zz = basis.index("+-"), basis.index("-+"), basis.index("00")

    if isinstance(source, (SpinState, np.ndarray)):
        state = source
    rho = _two_qutrit_density(state) if state is not None else None

    rho_pm_mp = abs(rho[pm, mp]) if rho is not None else 0.0
    if isinstance(source, ParityCurve):
        amplitude = source.amplitude
    elif isinstance(source, (int, float)):
        amplitude = float(source)
    else:
        assert rho is not None
        amplitude = 0.5 * float(rho[pm, pm].real + rho[mp, mp].real + 2 * rho_pm_mp)

    if rho is None:
        p00 = rho_pm_00 = rho_mp_00 = 0.0
    else:
        p00 = float(rho[zz, zz].real)
        rho_pm_00 = float(abs(rho[pm, zz]))
        rho_mp_00 = float(abs(rho[mp, zz]))

    lhs = 2 * amplitude + p00 + 2 * rho_pm_00 + 2 * rho_mp_00
    return WitnessReport(
        amplitude=amplitude,
        p00=p00,
        rho_pm_00=rho_pm_00,
        rho_mp_00=rho_mp_00,
        rho_pm_mp=float(rho_pm_mp),
        lhs=lhs,
        violated=amplitude > 0.5 + WITNESS_TOLERANCE or lhs > 1 + WITNESS_TOLERANCE,
        margin=lhs - 1,
        conservative=rho is None,
    )


def _random_qutrit(rng: np.random.Generator) -> NDArray[np.complex128]:
    vector = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    return vector / np.linalg.norm(vector)


def random_separable_state(
    rng: np.random.Generator, *, max_products: int = 4
) -> NDArray[np.complex128]:
    """Density matrix of a random mixture of 1 to `max_products` product states of two qutrits."""
    count = int(rng.integers(1, max_products + 1))
    weights = rng.dirichlet(np.ones(count))
    rho = np.zeros((9, 9), dtype=complex)
    for weight in weights:
        product = np.kron(_random_qutrit(rng), _random_qutrit(rng))
        rho += weight * np.outer(product, product.conj())
    return rho


@dataclass(frozen=True, eq=False)
class EntanglementPoint:
    time: float
    curve: ParityCurve
    report: WitnessReport


def entanglement_vs_time(
    spec: ChainSpec,
    coupling: CouplingSet,
    times: typing.Sequence[float],
    config: MeasurementConfig,
    *,
    phi_grid: typing.Sequence[float] | None = None,
    include_v_terms: bool = False,
) -> list[EntanglementPoint]:
    """Evolve |00> for each duration, then run the parity analysis and the witness.

    `times` must be non-decreasing.

    With Rabi noise every draw rescales the couplings by (1 + e)^2 and the
    pulse areas by (1 + e); the detection probabilities are averaged over draws.
    The draws depend only on the seed and `noise_draws`, not on `times`.
    """
    if spec.n_ions != 2:
        raise ConfigurationError(
            f"the entanglement witness needs two ions, got {spec.n_ions}",
            context="entanglement_vs_time",
        )
    phis = np.linspace(0, math.pi, 25, endpoint=False) if phi_grid is None else np.asarray(phi_grid, dtype=float)
    start = reference_state("all_zero", 2)

    trajectories = []
    for scale in config.noise_scales():
        scaled = replace(
            coupling,
            j_matrix=coupling.j_matrix * scale**2,
            v_matrix=coupling.v_matrix * scale**2,
        )
        hamiltonian = build_effective(scaled, spec, include_v_terms)
        trajectories.append((float(scale), evolve_many(start, hamiltonian, times)))

    points = []
    for t_index, t in enumerate(times):
        draws = [(scale, states[t_index]) for scale, states in trajectories]
        curve = _scan(draws, entanglement_sequence, phis, config, 2, t_index)
        exact_state = draws[0][1] if len(draws) == 1 and config.exact else None
        report = witness(curve, state=exact_state)
        log.info("t=%.6g s amplitude=%.4f lhs=%.4f", t, curve.amplitude, report.lhs)
        points.append(EntanglementPoint(float(t), curve, report))

    return points
