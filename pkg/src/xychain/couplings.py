"""Spin-spin couplings and spin-phonon shifts mediated by the transverse modes."""

from __future__ import annotations

import logging
import typing
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from xychain.errors import (
    AlphaRangeError,
    ConfigurationError,
    FitUndefinedError,
    ResonanceError,
    SolverConvergenceError,
)
from xychain.ionchain import ChainSpec, NormalModes, transverse_modes

__all__ = [
    "RESONANCE_GUARD",
    "CouplingSet",
    "PowerLawFit",
    "alpha_scan",
    "coupling_matrix",
    "derive_couplings",
    "fit_power_law",
    "mu_bracket",
    "power_law_couplings",
    "spin_phonon_shifts",
    "tune_alpha",
]

log = logging.getLogger(__name__)

RESONANCE_GUARD: float = 10.0
# Above roughly this ratio to the COM frequency alpha stops increasing with mu.
MU_BRACKET_RATIO: float = 1.3
ALPHA_TOLERANCE: float = 0.005
ALPHA_TARGET_RANGE: tuple[float, float] = (0.05, 3.0)

FitMethod = typing.Literal["all_pairs", "adjacent", "distance_averaged"]


@dataclass(frozen=True)
class PowerLawFit:
    """J_ij ~ j0 / |i - j|^alpha.

    `j0` carries the common sign of the couplings.
    """

    j0: float
    alpha: float
    method: FitMethod = "all_pairs"
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class CouplingSet:
    j_matrix: NDArray[np.float64]
    v_matrix: NDArray[np.float64] = field(
        default_factory=lambda: np.zeros((0, 0))
    )
    power_law: PowerLawFit | None = None
    adjacent: PowerLawFit | None = None
    distance_averaged: PowerLawFit | None = None
    uniformity: float = 0.0

    @property
    def n_sites(self) -> int:
        return len(self.j_matrix)

    def is_mirror_symmetric(self, tolerance: float = 1e-12) -> bool:
        j = self.j_matrix
        scale = max(float(np.max(np.abs(j))), 1.0) if j.size else 1.0
        return bool(np.max(np.abs(j - j[::-1, ::-1]), initial=0.0) <= tolerance * scale)

    def pairs(self) -> list[tuple[int, int, int, float]]:
        """(i, j, |i - j|, J_ij) for every pair i < j, with 1-based sites."""
        n = self.n_sites
        return [
            (i + 1, j + 1, j - i, float(self.j_matrix[i, j]))
            for i in range(n)
            for j in range(i + 1, n)
        ]

    def to_dict(self) -> dict[str, typing.Any]:
        result: dict[str, typing.Any] = {
            "j_matrix_hz": self.j_matrix.tolist(),
            "v_matrix_hz": self.v_matrix.tolist(),
            "uniformity": self.uniformity,
        }
        for fit in (self.power_law, self.adjacent, self.distance_averaged):
            if fit is not None:
                result[f"fit_{fit.method}"] = {
                    "j0_hz": fit.j0,
                    "alpha": fit.alpha,
                    "residual": fit.residual,
                }
        return result


def _detunings(modes: NormalModes, spec: ChainSpec) -> NDArray[np.float64]:
    if modes.lamb_dicke.shape != (spec.n_ions, spec.n_ions):
        raise ConfigurationError(
            f"modes describe {modes.lamb_dicke.shape[0]} ions, spec has {spec.n_ions}",
            context="couplings",
        )

    detuning = spec.mu_detuning - modes.mode_freqs
    drive = np.abs(modes.lamb_dicke) * spec.rabi[:, None]
    threshold = RESONANCE_GUARD * drive.max(axis=0)

    for m, (gap, limit) in enumerate(zip(np.abs(detuning), threshold)):
        if gap == 0 or gap <= limit:
            raise ResonanceError(
                f"beatnote {spec.mu_detuning:.6g} Hz is {gap:.6g} Hz from mode {m} "
                f"({modes.mode_freqs[m]:.6g} Hz); need more than {limit:.6g} Hz",
                mode=m,
                gap=float(gap),
                context="couplings",
            )
    return detuning


def coupling_matrix(modes: NormalModes, spec: ChainSpec) -> CouplingSet:
    """J_ij = Omega_i Omega_j sum_m eta_im eta_jm / (2 (mu - omega_m)), in Hz."""
    detuning = _detunings(modes, spec)
    drive = modes.lamb_dicke * spec.rabi[:, None]

    full = drive @ np.diag(1 / (2 * detuning)) @ drive.T
    upper = np.triu(full, k=1)
    return CouplingSet(j_matrix=upper + upper.T)


def spin_phonon_shifts(modes: NormalModes, spec: ChainSpec) -> CouplingSet:
    """V_im = (eta_im Omega_i)^2 / (8 (mu - omega_m)), in Hz."""
    detuning = _detunings(modes, spec)
    drive = modes.lamb_dicke * spec.rabi[:, None]
    v_matrix = drive**2 / (8 * detuning[None, :])

    totals = v_matrix.sum(axis=1)
    mean = float(np.mean(totals))
    uniformity = 0.0 if mean == 0 else float(np.ptp(totals) / abs(mean))

    return CouplingSet(
        j_matrix=np.zeros((spec.n_ions, spec.n_ions)),
        v_matrix=v_matrix,
        uniformity=uniformity,
    )


def _sign_pattern(values: NDArray[np.float64]) -> str:
    return "".join("+" if v > 0 else "-" if v < 0 else "0" for v in values)


def fit_power_law(
    coupling: CouplingSet, method: FitMethod = "all_pairs"
) -> PowerLawFit:
    """Least-squares fit of log|J_ij| against log|i - j|.

    `all_pairs` fits every pair with equal weight. `adjacent` pins j0 to the
    mean nearest-neighbour |J| and fits alpha alone from the longer-range
    pairs. `distance_averaged` first averages |J| over the pairs at each
    distance.

    Examples:
        >>> fit = fit_power_law(power_law_couplings(5, 1000.0, 1.0))
        >>> round(fit.j0, 6), round(fit.alpha, 6)
        (1000.0, 1.0)
    """
    n = coupling.n_sites
    if n < 3:
        raise ConfigurationError(
            f"a power-law fit needs at least 3 sites, got {n}", context="fit_power_law"
        )

    rows, cols = np.triu_indices(n, k=1)
    values = coupling.j_matrix[rows, cols]
    signs = np.sign(values)
    if np.any(signs == 0) or not np.all(signs == signs[0]):
        pattern = _sign_pattern(values)
        raise FitUndefinedError(
            f"couplings do not share one sign (pattern {pattern})",
            sign_pattern=pattern,
            context="fit_power_law",
        )

    distance = (cols - rows).astype(float)
    magnitude = np.abs(values)
    if method == "adjacent":
        j0 = float(np.mean(magnitude[distance == 1]))
        far = distance > 1
        log_distance = np.log(distance[far])
        alpha = float(-log_distance @ np.log(magnitude[far] / j0) / (log_distance @ log_distance))
        residual = float(np.sqrt(np.mean((np.log(magnitude / j0) + alpha * np.log(distance)) ** 2)))
        return PowerLawFit(j0=float(signs[0] * j0), alpha=alpha, method=method, residual=residual)
    if method == "distance_averaged":
        distance = np.arange(1, n, dtype=float)
        magnitude = np.array(
            [np.mean(np.abs(np.diagonal(coupling.j_matrix, offset=d))) for d in range(1, n)]
        )
    elif method != "all_pairs":
        raise ConfigurationError(f"unknown fit method {method!r}", context="fit_power_law")

    design = np.column_stack([np.ones_like(distance), np.log(distance)])
    target = np.log(magnitude)
    (intercept, slope), *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.sqrt(np.mean((design @ [intercept, slope] - target) ** 2)))

    return PowerLawFit(
        j0=float(signs[0] * np.exp(intercept)),
        alpha=float(-slope),
        method=method,
        residual=residual,
    )


def power_law_couplings(n_sites: int, j0: float, alpha: float) -> CouplingSet:
    """Ideal couplings J_ij = j0 / |i - j|^alpha, with no spin-phonon shifts."""
    if n_sites < 1:
        raise ConfigurationError(f"n_sites must be >= 1, got {n_sites}")

    index = np.arange(n_sites)
    distance = np.abs(index[:, None] - index[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        j_matrix = np.where(distance > 0, j0 / distance**alpha, 0.0)

    return CouplingSet(
        j_matrix=j_matrix,
        v_matrix=np.zeros((n_sites, n_sites)),
        power_law=PowerLawFit(j0=j0, alpha=alpha) if n_sites >= 3 else None,
    )


def derive_couplings(spec: ChainSpec, modes: NormalModes | None = None) -> CouplingSet:
    """Couplings, shifts and both power-law fits for `spec`."""
    if modes is None:
        modes = transverse_modes(spec)

    coupling = coupling_matrix(modes, spec)
    shifts = spin_phonon_shifts(modes, spec)
    coupling = replace(
        coupling, v_matrix=shifts.v_matrix, uniformity=shifts.uniformity
    )

    if spec.n_ions < 3:
        return coupling

    try:
        return replace(
            coupling,
            power_law=fit_power_law(coupling),
            adjacent=fit_power_law(coupling, method="adjacent"),
            distance_averaged=fit_power_law(coupling, method="distance_averaged"),
        )
    except FitUndefinedError as e:
        log.warning("no power-law fit: %s", e)
        return coupling


def _fitted_alpha(spec: ChainSpec, modes: NormalModes, mu: float) -> float:
    coupling = coupling_matrix(modes, replace(spec, mu_detuning=mu))
    return fit_power_law(coupling).alpha


def alpha_scan(
    spec: ChainSpec,
    mus: typing.Sequence[float],
    *,
    threads: int | None = None,
    modes: NormalModes | None = None,
) -> NDArray[np.float64]:
    """Fitted all-pairs alpha for each beatnote in `mus`, in input order."""
    if modes is None:
        modes = transverse_modes(spec)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        alphas = pool.map(lambda mu: _fitted_alpha(spec, modes, mu), mus)
        return np.fromiter(alphas, dtype=float, count=len(mus))


def mu_bracket(spec: ChainSpec, modes: NormalModes) -> tuple[float, float]:
    """Beatnote range above the COM mode over which alpha grows with mu."""
    com = float(modes.mode_freqs[0])
    guard = RESONANCE_GUARD * float(np.max(np.abs(modes.lamb_dicke[:, 0]) * spec.rabi))
    low = com + guard * (1 + 1e-6)
    high = max(MU_BRACKET_RATIO * com, low * (1 + 1e-6))
    return low, high


def tune_alpha(
    spec: ChainSpec,
    target_alpha: float,
    *,
    tolerance: float = ALPHA_TOLERANCE,
    max_iterations: int = 200,
) -> float:
    """Find the beatnote above the COM mode whose fitted alpha hits `target_alpha`.

    Bisects in log(mu - f_com) inside `mu_bracket`.

    Raises:
        ConfigurationError: if the target lies outside `ALPHA_TARGET_RANGE`.
        AlphaRangeError: if the target lies outside the alpha range of the bracket.
        SolverConvergenceError: if `max_iterations` bisection steps do not get
            within `tolerance`.
    """
    lowest, highest = ALPHA_TARGET_RANGE
    if not lowest <= target_alpha <= highest:
        raise ConfigurationError(
            f"target alpha must lie in [{lowest}, {highest}], got {target_alpha}",
            context="tune_alpha",
        )

    modes = transverse_modes(spec)
    com = float(modes.mode_freqs[0])
    low, high = mu_bracket(spec, modes)

    alpha_low = _fitted_alpha(spec, modes, low)
    alpha_high = _fitted_alpha(spec, modes, high)
    if not alpha_low <= target_alpha <= alpha_high:
        raise AlphaRangeError(
            f"alpha {target_alpha} is outside the reachable range "
            f"[{alpha_low:.4f}, {alpha_high:.4f}]",
            alpha_min=alpha_low,
            alpha_max=alpha_high,
            context="tune_alpha",
        )

    log_low, log_high = np.log(low - com), np.log(high - com)
    alpha = alpha_low
    for _ in range(max_iterations):
        log_mid = (log_low + log_high) / 2
        mu = com + float(np.exp(log_mid))
        alpha = _fitted_alpha(spec, modes, mu)
        log.debug("tune_alpha mu=%.3f alpha=%.5f", mu, alpha)

        if abs(alpha - target_alpha) < tolerance:
            return mu
        if alpha < target_alpha:
            log_low = log_mid
        else:
            log_high = log_mid

    raise SolverConvergenceError(
        f"alpha {alpha:.5f} still {abs(alpha - target_alpha):.2e} from {target_alpha} "
        f"after {max_iterations} bisection steps",
        residual=abs(alpha - target_alpha),
        context="tune_alpha",
    )
