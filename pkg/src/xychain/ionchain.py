"""Equilibrium positions and transverse normal modes of a linear ion crystal."""

from __future__ import annotations

import logging
import typing
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray
from scipy import constants

from xychain.errors import ConfigurationError, SolverConvergenceError, UnstableChainError

__all__ = [
    "DEFAULT_MU_DETUNING",
    "YB171_MASS",
    "ChainSpec",
    "NormalModes",
    "equilibrium_positions",
    "lamb_dicke_factors",
    "length_scale",
    "transverse_modes",
]

log = logging.getLogger(__name__)

YB171_MASS: float = 170.936323 * constants.atomic_mass
RAMAN_355NM_DELTA_K: float = 2 * 2 * np.pi / 355e-9

# Beatnote that gives a fitted alpha of 0.36 on the default three-ion chain.
DEFAULT_MU_DETUNING: float = 4_835_089.0

LAMB_DICKE_WARNING: float = 0.3
NEWTON_ITERATION_CAP: int = 200
GRADIENT_TOLERANCE: float = 1e-12


SiteShift = tuple[float, float]


@dataclass(frozen=True)
class ChainSpec:
    """Physical configuration of the ion chain and its drive.

    All frequencies are ordinary frequencies in Hz.

    Arguments:
        n_ions: Number of ions in the chain.
        axial_freq: Axial trap frequency.
        transverse_com_freq: Transverse center-of-mass mode frequency.
        ion_mass: Ion mass in kg.
        delta_k: Magnitude of the Raman wavevector difference, in 1/m.
        rabi_freqs: Per-ion Rabi frequency. A single number applies to every ion.
        mu_detuning: Beatnote detuning, in the same frame as the mode frequencies.
        d_field: Coefficient of the global (S_z)^2 term.
        site_shifts: Optional per-site (linear, quadratic) S_z shift coefficients.

    Examples:
        >>> spec = ChainSpec(n_ions=2)
        >>> spec.rabi.tolist()
        [30000.0, 30000.0]
    """

    n_ions: int = 3
    axial_freq: float = 1.0e6
    transverse_com_freq: float = 4.8e6
    ion_mass: float = YB171_MASS
    delta_k: float = RAMAN_355NM_DELTA_K
    rabi_freqs: float | tuple[float, ...] = 30.0e3
    mu_detuning: float = DEFAULT_MU_DETUNING
    d_field: float = 0.0
    site_shifts: tuple[SiteShift, ...] | None = None

    def __post_init__(self):
        if self.n_ions < 1:
            raise ConfigurationError(
                f"n_ions must be >= 1, got {self.n_ions}", context="chain.n_ions"
            )

        for name in ("axial_freq", "transverse_com_freq", "ion_mass", "mu_detuning"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(
                    f"{name} must be > 0, got {value}", context=f"chain.{name}"
                )

        if self.delta_k < 0:
            raise ConfigurationError(
                f"delta_k must be >= 0, got {self.delta_k}", context="chain.delta_k"
            )

        if isinstance(self.rabi_freqs, (tuple, list)):
            if len(self.rabi_freqs) != self.n_ions:
                raise ConfigurationError(
                    f"rabi_freqs has {len(self.rabi_freqs)} entries for {self.n_ions} ions",
                    context="chain.rabi_freqs",
                )
            object.__setattr__(self, "rabi_freqs", tuple(self.rabi_freqs))

        if np.any(self.rabi < 0):
            raise ConfigurationError(
                "rabi_freqs must be >= 0", context="chain.rabi_freqs"
            )

        if self.site_shifts is not None:
            if len(self.site_shifts) != self.n_ions:
                raise ConfigurationError(
                    f"site_shifts has {len(self.site_shifts)} entries for {self.n_ions} ions",
                    context="chain.site_shifts",
                )
            object.__setattr__(
                self,
                "site_shifts",
                tuple((float(a), float(b)) for a, b in self.site_shifts),
            )

    @property
    def rabi(self) -> NDArray[np.float64]:
        return np.broadcast_to(
            np.asarray(self.rabi_freqs, dtype=float), (self.n_ions,)
        ).copy()

    @property
    def anisotropy(self) -> float:
        return self.transverse_com_freq / self.axial_freq

    def is_mirror_symmetric(self) -> bool:
        rabi = self.rabi
        if not np.allclose(rabi, rabi[::-1], rtol=1e-12, atol=0):
            return False
        if self.site_shifts is None:
            return True
        shifts = np.asarray(self.site_shifts)
        return bool(np.allclose(shifts, shifts[::-1], rtol=1e-12, atol=0))


@dataclass(frozen=True, eq=False)
class NormalModes:
    """Transverse normal modes, ordered by descending frequency.

    `mode_matrix[i, m]` is the participation of ion `i` in mode `m`; column 0
    is the center-of-mass mode.
    """

    mode_freqs: NDArray[np.float64]
    mode_matrix: NDArray[np.float64]
    lamb_dicke: NDArray[np.float64]
    equilibrium_positions: NDArray[np.float64]
    eigenvalues: NDArray[np.float64] = field(repr=False)
    length_scale: float = field(repr=False, default=float("nan"))

    @property
    def n_modes(self) -> int:
        return len(self.mode_freqs)

    def orthogonality_residual(self) -> float:
        b = self.mode_matrix
        return float(np.max(np.abs(b.T @ b - np.eye(len(b)))))

    def to_dict(self) -> dict[str, typing.Any]:
        """Plain-data form for JSON export. Matrices are row-major, rows are ions."""
        return {
            "mode_freqs_hz": self.mode_freqs.tolist(),
            "mode_matrix": self.mode_matrix.tolist(),
            "lamb_dicke": self.lamb_dicke.tolist(),
            "equilibrium_positions": self.equilibrium_positions.tolist(),
            "equilibrium_positions_m": (
                self.equilibrium_positions * self.length_scale
            ).tolist(),
            "hessian_eigenvalues": self.eigenvalues.tolist(),
            "orthogonality_residual": self.orthogonality_residual(),
        }


def length_scale(spec: ChainSpec) -> float:
    """Characteristic inter-ion spacing, in metres."""
    omega = 2 * np.pi * spec.axial_freq
    return float(
        (
            constants.e**2
            / (4 * np.pi * constants.epsilon_0 * spec.ion_mass * omega**2)
        )
        ** (1 / 3)
    )


def _potential_gradient(u: NDArray[np.float64]) -> NDArray[np.float64]:
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    return u - np.sum(np.sign(diff) / diff**2, axis=1)


def _axial_hessian(u: NDArray[np.float64]) -> NDArray[np.float64]:
    dist = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(dist, np.inf)
    coupling = 2 / dist**3
    hessian = -coupling
    np.fill_diagonal(hessian, 1 + coupling.sum(axis=1))
    return hessian


def equilibrium_positions(n_ions: int) -> NDArray[np.float64]:
    """Dimensionless equilibrium positions of `n_ions` ions in a harmonic well.

    Solves for the stationary point of sum(u_i^2 / 2) + sum_{i<j} 1/|u_i - u_j|
    with a damped Newton iteration.

    Examples:
        >>> equilibrium_positions(1).tolist()
        [0.0]
        >>> [round(x, 5) for x in equilibrium_positions(2)]
        [-0.62996, 0.62996]
    """
    if n_ions < 1:
        raise ConfigurationError(f"n_ions must be >= 1, got {n_ions}")

    if n_ions == 1:
        return np.zeros(1)

    u = np.linspace(-1.0, 1.0, n_ions) * n_ions**0.56
    grad = _potential_gradient(u)
    residual = float(np.max(np.abs(grad)))

    for iteration in range(NEWTON_ITERATION_CAP):
        if residual < GRADIENT_TOLERANCE:
            break

        step = np.linalg.solve(_axial_hessian(u), -grad)

        # Halve the step until the ordering survives and the residual drops.
        scale = 1.0
        while scale > 1e-6:
            trial = u + scale * step
            if np.all(np.diff(trial) > 0):
                trial_grad = _potential_gradient(trial)
                trial_residual = float(np.max(np.abs(trial_grad)))
                if trial_residual < residual or residual < 1e-9:
                    break
            scale /= 2
        else:
            raise SolverConvergenceError(
                f"line search stalled at iteration {iteration}",
                residual=residual,
                context="equilibrium_positions",
            )

        u, grad, residual = trial, trial_grad, trial_residual
        log.debug("newton iteration %d residual %.3e", iteration, residual)
    else:
        if residual >= GRADIENT_TOLERANCE:
            raise SolverConvergenceError(
                f"no convergence after {NEWTON_ITERATION_CAP} iterations "
                f"(gradient {residual:.3e})",
                residual=residual,
                context="equilibrium_positions",
            )

    # One more Newton step from the symmetrized point.
    u = (u - u[::-1]) / 2
    u = u + np.linalg.solve(_axial_hessian(u), -_potential_gradient(u))
    return (u - u[::-1]) / 2


def _transverse_hessian(u: NDArray[np.float64], anisotropy: float) -> NDArray[np.float64]:
    dist = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(dist, np.inf)
    coupling = 1 / dist**3
    hessian = coupling.copy()
    np.fill_diagonal(hessian, anisotropy**2 - coupling.sum(axis=1))
    return hessian


def _fix_signs(vectors: NDArray[np.float64]) -> NDArray[np.float64]:
    vectors = vectors.copy()
    for m in range(vectors.shape[1]):
        column = vectors[:, m]
        magnitude = np.abs(column)
        pivot = int(np.flatnonzero(magnitude >= magnitude.max() - 1e-9)[0])
        if column[pivot] < 0:
            vectors[:, m] = -column
    return vectors


def transverse_modes(spec: ChainSpec) -> NormalModes:
    """Diagonalize the transverse Hessian of the chain described by `spec`.

    Raises:
        UnstableChainError: if any mode frequency is imaginary (zigzag transition).
    """
    u = equilibrium_positions(spec.n_ions)
    hessian = _transverse_hessian(u, spec.anisotropy)

    eigenvalues, vectors = np.linalg.eigh(hessian)
    order = np.argsort(eigenvalues, kind="stable")[::-1]
    eigenvalues = eigenvalues[order]
    vectors = _fix_signs(vectors[:, order])

    if eigenvalues[-1] <= 0:
        raise UnstableChainError(
            f"linear chain of {spec.n_ions} ions is unstable at anisotropy "
            f"{spec.anisotropy:.4g} (lowest transverse eigenvalue {eigenvalues[-1]:.4g})",
            anisotropy=spec.anisotropy,
            context="transverse_modes",
        )

    mode_freqs = spec.axial_freq * np.sqrt(eigenvalues)

    modes = NormalModes(
        mode_freqs=mode_freqs,
        mode_matrix=vectors,
        lamb_dicke=np.zeros_like(vectors),
        equilibrium_positions=u,
        eigenvalues=eigenvalues,
        length_scale=length_scale(spec),
    )
    return replace(modes, lamb_dicke=lamb_dicke_factors(modes, spec))


def lamb_dicke_factors(modes: NormalModes, spec: ChainSpec) -> NDArray[np.float64]:
    """eta[i, m] = b[i, m] * delta_k * sqrt(h / (8 pi^2 M f_m))."""
    zero_point = np.sqrt(constants.h / (8 * np.pi**2 * spec.ion_mass * modes.mode_freqs))
    eta = modes.mode_matrix * spec.delta_k * zero_point[None, :]

    largest = float(np.max(np.abs(eta))) if eta.size else 0.0
    if largest > LAMB_DICKE_WARNING:
        log.warning(
            "Lamb-Dicke factor %.3f exceeds %.1f; the effective model may not apply",
            largest,
            LAMB_DICKE_WARNING,
        )
    return eta
