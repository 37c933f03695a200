"""Effective and full spin-phonon Hamiltonians, time evolution and spectra."""

from __future__ import annotations

import itertools
import logging
import math
import typing
from dataclasses import dataclass, field, replace
from functools import cache

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh, expm_multiply

from xychain.couplings import CouplingSet, derive_couplings
from xychain.errors import ConfigurationError, HilbertSpaceSizeError, IntegrationError
from xychain.ionchain import ChainSpec, NormalModes, transverse_modes
from xychain.quantum import (
    DENSE_SITE_LIMIT,
    Basis,
    LinearOp,
    SpinState,
    build_basis,
    inversion_op,
    reference_state,
    rotation_pi_sx_op,
    site_operator,
)

__all__ = [
    "DEFAULT_NBAR",
    "AdiabaticResult",
    "ComparisonResult",
    "EffectiveHamiltonian",
    "FullHamiltonian",
    "GroundState",
    "PhononState",
    "RampProfile",
    "SectorSweep",
    "SymmetryReport",
    "Trajectory",
    "adiabatic_prepare",
    "build_effective",
    "build_full",
    "evolve",
    "evolve_many",
    "full_vs_effective",
    "ground_state",
    "symmetry_diagnosis",
    "symmetry_sectors",
]

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
DEFAULT_NBAR: float = 0.05
DEGENERACY_TOLERANCE: float = 1e-9
STEP_TOLERANCE: float = 1e-8
FULL_DIMENSION_CAP: int = 20_000
TRUNCATION_WARNING: float = 1e-3

RampShape = typing.Literal["exponential", "linear", "table"]


@dataclass(frozen=True)
class RampProfile:
    """Time dependence of the (S_z)^2 field.

    Examples:
        >>> ramp = RampProfile(d0=5000.0, tau=0.167e-3, duration=1e-3)
        >>> round(ramp.value(0.167e-3) / 5000.0, 6)
        0.367879
    """

    d0: float
    duration: float
    shape: RampShape = "exponential"
    tau: float = 0.0
    d_end: float = 0.0
    table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigurationError(
                f"ramp duration must be > 0, got {self.duration}", context="ramp.duration"
            )
        if self.shape == "exponential" and not self.tau > 0:
            raise ConfigurationError(
                f"exponential ramp needs tau > 0, got {self.tau}", context="ramp.tau"
            )
        if self.shape == "table":
            times = [t for t, _ in self.table]
            if len(times) < 2 or any(b <= a for a, b in itertools.pairwise(times)):
                raise ConfigurationError(
                    "table ramp needs at least two points with increasing times",
                    context="ramp.table",
                )
        elif self.shape not in ("exponential", "linear"):
            raise ConfigurationError(f"unknown ramp shape {self.shape!r}", context="ramp.shape")

    def value(self, t: float) -> float:
        if self.shape == "exponential":
            return self.d0 * math.exp(-t / self.tau)
        if self.shape == "linear":
            fraction = min(max(t / self.duration, 0.0), 1.0)
            return self.d0 + (self.d_end - self.d0) * fraction

        times, values = zip(*self.table)
        return float(np.interp(t, times, values))


@cache
def _site_ops(basis: Basis) -> dict[str, list[sp.csr_array]]:
    return {
        kind: [site_operator(basis, i + 1, kind).matrix for i in range(basis.n_sites)]
        for kind in ("raise", "lower", "sz", "sz_squared")
    }


def _xy_matrix(basis: Basis, j_matrix: NDArray[np.float64]) -> sp.csr_array:
    ops = _site_ops(basis)
    result = sp.csr_array((basis.dimension, basis.dimension), dtype=complex)
    for i, j in itertools.combinations(range(basis.n_sites), 2):
        if j_matrix[i, j] == 0:
            continue
        hop = ops["raise"][i] @ ops["lower"][j]
        result = result + (j_matrix[i, j] / 4) * (hop + hop.conj().T)
    return result


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    """Spin-only Hamiltonian: XY exchange plus field terms, in Hz.

    `static_field` holds the site shifts and spin-phonon terms. The global
    (S_z)^2 coefficient is `d_field`, or `ramp.value(t)` when a ramp is set.
    """

    basis: Basis
    xy_part: LinearOp
    static_field: LinearOp
    sz2_sum: LinearOp
    d_field: float = 0.0
    ramp: RampProfile | None = None
    j_matrix: NDArray[np.float64] = field(repr=False, default_factory=lambda: np.zeros(0))

    @property
    def is_time_dependent(self) -> bool:
        return self.ramp is not None

    def d_at(self, t: float) -> float:
        return self.ramp.value(t) if self.ramp is not None else self.d_field

    def field_part(self, t: float = 0.0) -> LinearOp:
        return self.static_field + self.sz2_sum * self.d_at(t)

    def at(self, t: float = 0.0) -> LinearOp:
        return self.xy_part + self.field_part(t)

    def with_d_field(self, d_field: float) -> EffectiveHamiltonian:
        return replace(self, d_field=d_field, ramp=None)

    def with_ramp(self, ramp: RampProfile) -> EffectiveHamiltonian:
        return replace(self, ramp=ramp)


def build_effective(
    coupling: CouplingSet,
    spec: ChainSpec,
    include_v_terms: bool = False,
    *,
    nbar: float = DEFAULT_NBAR,
    ramp: RampProfile | None = None,
) -> EffectiveHamiltonian:
    """Assemble sum_{i<j} J_ij/4 (S+S- + S-S+) + D sum (S_z)^2 + shifts.

    With `include_v_terms` the spin-phonon terms
    sum_{i,m} V_im [(2 nbar + 1) S_z^i - (S_z^i)^2] are added, with the phonon
    number replaced by `nbar`.
    """
    if coupling.n_sites != spec.n_ions:
        raise ConfigurationError(
            f"coupling matrix is {coupling.n_sites}x{coupling.n_sites} for {spec.n_ions} ions",
            context="build_effective",
        )

    basis = build_basis(spec.n_ions)
    ops = _site_ops(basis)
    dim = basis.dimension
    field_matrix = sp.csr_array((dim, dim), dtype=complex)

    if spec.site_shifts is not None:
        for i, (linear, quadratic) in enumerate(spec.site_shifts):
            field_matrix = field_matrix + linear * ops["sz"][i] + quadratic * ops["sz_squared"][i]

    if include_v_terms:
        if coupling.v_matrix.shape[0] != spec.n_ions:
            raise ConfigurationError(
                "coupling set carries no spin-phonon shifts", context="build_effective"
            )
        totals = coupling.v_matrix.sum(axis=1)
        for i, total in enumerate(totals):
            field_matrix = field_matrix + total * (
                (2 * nbar + 1) * ops["sz"][i] - ops["sz_squared"][i]
            )

    sz2_sum = sum(ops["sz_squared"], sp.csr_array((dim, dim), dtype=complex))
    return EffectiveHamiltonian(
        basis=basis,
        xy_part=LinearOp(_xy_matrix(basis, coupling.j_matrix), hermitian=True),
        static_field=LinearOp(field_matrix, hermitian=True),
        sz2_sum=LinearOp(sz2_sum, hermitian=True),
        d_field=spec.d_field,
        ramp=ramp,
        j_matrix=coupling.j_matrix,
    )


@dataclass(frozen=True)
class PhononState:
    """Initial phonon occupation: every mode thermal with mean number `nbar`."""

    nbar: float = 0.0

    def __post_init__(self):
        if self.nbar < 0:
            raise ConfigurationError(f"nbar must be >= 0, got {self.nbar}", context="phonons.nbar")

    def fock_weights(self, n_max: int) -> NDArray[np.float64]:
        levels = np.arange(n_max + 1)
        if self.nbar == 0:
            return (levels == 0).astype(float)
        weights = self.nbar**levels / (1 + self.nbar) ** (levels + 1)
        return weights / weights.sum()


@dataclass(frozen=True, eq=False)
class FullHamiltonian:
    """Interaction-picture spin-phonon Hamiltonian, in Hz.

    H(t) = sum_{i,m} i g_im (-S+_i a_m exp(2 pi i delta_m t) + h.c.) with
    g_im = eta_im Omega_i / (2 sqrt 2) and delta_m = mu - omega_m. It is
    stored as the static operator `coupling_part` together with the phonon
    frame generator sum_m delta_m a_m^dag a_m.
    """

    basis: Basis
    n_max: int
    n_modes: int
    coupling_part: LinearOp
    frame_generator: NDArray[np.float64] = field(repr=False)
    detunings: NDArray[np.float64] = field(repr=False)
    phonons: PhononState = PhononState()

    @property
    def phonon_dims(self) -> tuple[int, ...]:
        return (self.n_max + 1,) * self.n_modes

    @property
    def dimension(self) -> int:
        return self.basis.dimension * (self.n_max + 1) ** self.n_modes

    def at(self, t: float) -> LinearOp:
        phase = np.exp(-1j * TWO_PI * self.frame_generator * t)
        matrix = sp.diags_array(phase) @ self.coupling_part.matrix @ sp.diags_array(phase.conj())
        return LinearOp(matrix, hermitian=True)

    def product_state(self, spin: SpinState, fock: typing.Sequence[int]) -> SpinState:
        """spin (x) |n_1, n_2, ...>."""
        phonon = np.zeros(math.prod(self.phonon_dims))
        phonon[np.ravel_multi_index(tuple(fock), self.phonon_dims)] = 1
        return SpinState(np.kron(spin.amplitudes, phonon), self.basis, self.phonon_dims)

    def top_level_population(self, state: SpinState) -> float:
        """Population with any mode in its highest retained level."""
        probabilities = np.abs(state.amplitudes.reshape(self.basis.dimension, *self.phonon_dims)) ** 2
        levels = np.indices(self.phonon_dims)
        top = np.any(levels == self.n_max, axis=0)
        return float(probabilities[:, top].sum())


def _ladder(n_max: int) -> sp.csr_array:
    return sp.csr_array(sp.diags_array(np.sqrt(np.arange(1, n_max + 1)), offsets=1))


def build_full(
    modes: NormalModes,
    spec: ChainSpec,
    n_max: int,
    initial_phonons: PhononState | None = None,
    *,
    cap: int = FULL_DIMENSION_CAP,
) -> FullHamiltonian:
    if n_max < 1:
        raise ConfigurationError(f"n_max must be >= 1, got {n_max}", context="build_full")

    basis = build_basis(spec.n_ions)
    n_modes = modes.n_modes
    phonon_dim = (n_max + 1) ** n_modes
    dimension = basis.dimension * phonon_dim
    if dimension > cap:
        raise HilbertSpaceSizeError(
            f"spin-phonon space has dimension {dimension} (cap {cap}); reduce n_max "
            f"below {n_max} or use fewer ions",
            context="build_full",
        )

    a = _ladder(n_max)
    identity = sp.identity(n_max + 1, format="csr")
    number = sp.diags_array(np.arange(n_max + 1, dtype=float))

    def mode_op(op, m: int) -> sp.csr_array:
        factors = [op if k == m else identity for k in range(n_modes)]
        result = factors[0]
        for f in factors[1:]:
            result = sp.kron(result, f)
        return sp.csr_array(result)

    detunings = spec.mu_detuning - modes.mode_freqs
    generator = np.zeros(phonon_dim)
    for m in range(n_modes):
        generator = generator + detunings[m] * mode_op(number, m).diagonal()

    coupling = modes.lamb_dicke * spec.rabi[:, None] / (2 * math.sqrt(2))
    ops = _site_ops(basis)
    raising = sp.csr_array((dimension, dimension), dtype=complex)
    for i, m in itertools.product(range(spec.n_ions), range(n_modes)):
        if coupling[i, m] == 0:
            continue
        raising = raising + (-1j * coupling[i, m]) * sp.kron(ops["raise"][i], mode_op(a, m))

    return FullHamiltonian(
        basis=basis,
        n_max=n_max,
        n_modes=n_modes,
        coupling_part=LinearOp(raising + raising.conj().T, hermitian=True),
        frame_generator=np.kron(np.ones(basis.dimension), generator),
        detunings=detunings,
        phonons=initial_phonons or PhononState(),
    )


def _single_sector(state: SpinState) -> NDArray[np.int64] | None:
    if state.phonon_dims:
        return None
    occupied = np.unique(state.basis.sz_total[state.amplitudes != 0])
    if len(occupied) != 1:
        return None
    return state.basis.sector(int(occupied[0]))


class _Propagator:
    """exp(-2 pi i H t) applied through a single eigendecomposition (or Krylov above the dense limit)."""

    def __init__(self, matrix: sp.csr_array):
        self.matrix = matrix
        self.dense = matrix.shape[0] <= 3**DENSE_SITE_LIMIT
        if self.dense:
            self.energies, self.vectors = np.linalg.eigh(matrix.toarray())

    def apply(self, vector: NDArray[np.complex128], t: float) -> NDArray[np.complex128]:
        if t == 0:
            return vector.copy()
        if self.dense:
            coefficients = self.vectors.conj().T @ vector
            return self.vectors @ (np.exp(-1j * TWO_PI * self.energies * t) * coefficients)
        return expm_multiply(-1j * TWO_PI * t * self.matrix, vector)


def _embed(indices: NDArray[np.int64] | None, part: NDArray[np.complex128], size: int):
    if indices is None:
        return part
    full = np.zeros(size, dtype=complex)
    full[indices] = part
    return full


def _step(matrix: NDArray[np.complex128], vector: NDArray[np.complex128], dt: float):
    energies, vectors = np.linalg.eigh(matrix)
    return vectors @ (np.exp(-1j * TWO_PI * energies * dt) * (vectors.conj().T @ vector))


def _integrate(
    hamiltonian: EffectiveHamiltonian,
    vector: NDArray[np.complex128],
    indices: NDArray[np.int64] | None,
    t0: float,
    t1: float,
    tolerance: float,
    first_step: float,
) -> tuple[NDArray[np.complex128], float]:
    """Adaptive exponential-midpoint integration from t0 to t1.

    Returns the state at t1 and the step size to try next.
    """
    xy = hamiltonian.xy_part.matrix
    static = hamiltonian.static_field.matrix
    sz2 = hamiltonian.sz2_sum.matrix
    if indices is not None:
        xy, static, sz2 = (m[indices][:, indices] for m in (xy, static, sz2))
    base = (xy + static).toarray()
    field_diag = sz2.toarray()

    def h_at(t: float) -> NDArray[np.complex128]:
        return base + hamiltonian.d_at(t) * field_diag

    t = t0
    dt = min(first_step, t1 - t0)
    minimum = max(t1 - t0, 1e-300) * 1e-12
    while t < t1:
        dt = min(dt, t1 - t)
        coarse = _step(h_at(t + dt / 2), vector, dt)
        half = _step(h_at(t + dt / 4), vector, dt / 2)
        fine = _step(h_at(t + 3 * dt / 4), half, dt / 2)
        error = float(np.linalg.norm(fine - coarse))

        if error <= tolerance:
            vector = fine
            t = t1 if t1 - t - dt <= minimum else t + dt
            growth = 2.0 if error == 0 else min(2.0, 0.9 * (tolerance / error) ** (1 / 3))
            dt *= max(growth, 1.0)
            continue

        dt *= max(0.2, 0.9 * (tolerance / error) ** (1 / 3))
        if dt < minimum:
            raise IntegrationError(
                f"step size underflow at t={t:.6g} s; refinement differs by {error:.3e}",
                achieved=error,
                context="evolve",
            )
    return vector, dt


def _initial_step(hamiltonian: EffectiveHamiltonian, duration: float) -> float:
    scale = hamiltonian.at(0).max_abs() * hamiltonian.basis.n_sites + 1.0
    return min(duration, 0.01 / scale)


def evolve(
    state: SpinState,
    hamiltonian: EffectiveHamiltonian | FullHamiltonian | LinearOp,
    duration: float,
    *,
    restrict_sector: bool = True,
    tolerance: float = STEP_TOLERANCE,
) -> SpinState:
    """Propagate `state` by T exp(-2 pi i integral H dt) over `duration` seconds."""
    return evolve_many(
        state,
        hamiltonian,
        [duration],
        restrict_sector=restrict_sector,
        tolerance=tolerance,
    )[0]


def evolve_many(
    state: SpinState,
    hamiltonian: EffectiveHamiltonian | FullHamiltonian | LinearOp,
    times: typing.Sequence[float],
    *,
    restrict_sector: bool = True,
    tolerance: float = STEP_TOLERANCE,
) -> list[SpinState]:
    """States at each of `times` (seconds from the start, non-decreasing)."""
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or any(b < a for a, b in itertools.pairwise(times)):
        raise ConfigurationError("evolution times must be >= 0 and non-decreasing", context="evolve")

    if isinstance(hamiltonian, FullHamiltonian):
        return _evolve_full(state, hamiltonian, times)

    if isinstance(hamiltonian, LinearOp):
        matrix = hamiltonian.matrix
        time_dependent = None
    else:
        matrix = hamiltonian.at(0).matrix
        time_dependent = hamiltonian if hamiltonian.is_time_dependent else None

    if matrix.shape[0] != len(state.amplitudes):
        raise ConfigurationError(
            f"state of size {len(state.amplitudes)} does not match a "
            f"{matrix.shape[0]}-dimensional Hamiltonian",
            context="evolve",
        )

    indices = _single_sector(state) if restrict_sector else None
    size = len(state.amplitudes)
    vector = state.amplitudes if indices is None else state.amplitudes[indices]

    if time_dependent is None:
        if indices is not None:
            matrix = matrix[indices][:, indices]
        propagator = _Propagator(sp.csr_array(matrix))
        return [
            state.with_amplitudes(_embed(indices, propagator.apply(vector, t), size))
            for t in times
        ]

    results = []
    current, dt = 0.0, _initial_step(time_dependent, max(times[-1], 1e-300))
    for t in times:
        if t > current:
            vector, dt = _integrate(time_dependent, vector, indices, current, t, tolerance, dt)
            current = t
        results.append(state.with_amplitudes(_embed(indices, vector, size)))
    return results


def _evolve_full(
    state: SpinState, hamiltonian: FullHamiltonian, times: list[float]
) -> list[SpinState]:
    # In the frame rotating with the phonon detunings the Hamiltonian is static.
    if state.phonon_dims != hamiltonian.phonon_dims:
        raise ConfigurationError(
            "full-model evolution needs a spin-phonon state; use FullHamiltonian.product_state",
            context="evolve",
        )
    static = hamiltonian.coupling_part.matrix - sp.diags_array(
        hamiltonian.frame_generator.astype(complex)
    )
    propagator = _Propagator(sp.csr_array(static))

    results = []
    for t in times:
        rotated = propagator.apply(state.amplitudes, t)
        phase = np.exp(-1j * TWO_PI * hamiltonian.frame_generator * t)
        results.append(state.with_amplitudes(phase * rotated))
    return results


@dataclass(frozen=True, eq=False)
class GroundState:
    energy: float
    state: SpinState
    degenerate: bool = False
    multiplet: tuple[SpinState, ...] = ()
    energies: NDArray[np.float64] = field(repr=False, default_factory=lambda: np.zeros(0))


def _as_matrix(hamiltonian: EffectiveHamiltonian | LinearOp, time: float) -> tuple[sp.csr_array, Basis | None]:
    if isinstance(hamiltonian, EffectiveHamiltonian):
        return hamiltonian.at(time).matrix, hamiltonian.basis
    return hamiltonian.matrix, None


def _lowest(matrix: sp.csr_array, count: int = 6) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
    size = matrix.shape[0]
    if size <= 3**DENSE_SITE_LIMIT:
        return np.linalg.eigh(matrix.toarray())
    energies, vectors = eigsh(matrix, k=min(count, size - 2), which="SA")
    order = np.argsort(energies)
    return energies[order], vectors[:, order]


def ground_state(
    hamiltonian: EffectiveHamiltonian | LinearOp,
    subspace: int | None = None,
    *,
    basis: Basis | None = None,
    time: float = 0.0,
) -> GroundState:
    """Lowest eigenpair, optionally within the S_z = `subspace` sector.

    Eigenvalues within a relative gap of 1e-9 of the lowest are returned
    together as a degenerate multiplet.
    """
    matrix, own_basis = _as_matrix(hamiltonian, time)
    basis = basis or own_basis or build_basis(round(math.log(matrix.shape[0], 3)))

    indices = np.arange(basis.dimension) if subspace is None else basis.sector(subspace)
    if len(indices) == 0:
        raise ConfigurationError(
            f"sector S_z={subspace} is empty for {basis.n_sites} sites", context="ground_state"
        )

    energies, vectors = _lowest(sp.csr_array(matrix[indices][:, indices]))
    scale = max(float(np.max(np.abs(energies))), np.finfo(float).tiny)
    in_multiplet = np.abs(energies - energies[0]) <= DEGENERACY_TOLERANCE * scale

    multiplet = tuple(
        SpinState(_embed(indices, vectors[:, k], basis.dimension), basis)
        for k in np.flatnonzero(in_multiplet)
    )
    return GroundState(
        energy=float(energies[0]),
        state=multiplet[0],
        degenerate=len(multiplet) > 1,
        multiplet=multiplet,
        energies=energies,
    )


SectorKey = tuple[int, int]
SECTORS: tuple[SectorKey, ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def symmetry_sectors(basis: Basis, sz_value: int = 0) -> dict[SectorKey, NDArray[np.float64]]:
    """Orthonormal bases of the joint (inversion, S_x-pi rotation) eigenspaces.

    Columns are built from group orbits of basis states, so every entry is
    0 or +-1/sqrt(k).
    """
    inversion = inversion_op(basis).matrix.tocoo()
    rotation = rotation_pi_sx_op(basis).matrix.tocoo()
    invert = np.empty(basis.dimension, dtype=np.int64)
    invert[inversion.col] = inversion.row
    rotate = np.empty(basis.dimension, dtype=np.int64)
    rotate[rotation.col] = rotation.row

    result: dict[SectorKey, list[NDArray[np.float64]]] = {key: [] for key in SECTORS}
    seen: set[int] = set()
    for k in basis.sector(sz_value):
        orbit = {int(k), int(invert[k]), int(rotate[k]), int(rotate[invert[k]])}
        if min(orbit) in seen:
            continue
        seen.add(min(orbit))
        for a, b in SECTORS:
            vector = np.zeros(basis.dimension)
            vector[k] += 1
            vector[invert[k]] += a
            vector[rotate[k]] += b
            vector[rotate[invert[k]]] += a * b
            norm = np.linalg.norm(vector)
            if norm > 0:
                result[(a, b)].append(vector / norm)

    return {
        key: np.column_stack(vectors) if vectors else np.zeros((basis.dimension, 0))
        for key, vectors in result.items()
    }


def _sector_energies(
    matrix: NDArray[np.complex128], sectors: dict[SectorKey, NDArray[np.float64]]
) -> tuple[dict[SectorKey, float], float]:
    energies = {}
    for key, columns in sectors.items():
        if columns.shape[1]:
            block = columns.T @ matrix @ columns
            energies[key] = float(np.linalg.eigvalsh(block)[0])
        else:
            energies[key] = math.nan

    coupling = 0.0
    for a, b in itertools.combinations(SECTORS, 2):
        if sectors[a].shape[1] and sectors[b].shape[1]:
            block = sectors[a].T @ matrix @ sectors[b]
            coupling = max(coupling, float(np.max(np.abs(block))))
    return energies, coupling


def _eigenvalue(expectation: float) -> int | None:
    if abs(abs(expectation) - 1) < 1e-9:
        return round(expectation)
    return None


@dataclass(frozen=True)
class SectorSweep:
    d_values: tuple[float, ...]
    energies: dict[SectorKey, tuple[float, ...]]
    inter_sector_coupling: float
    crossing: float | None


@dataclass(frozen=True)
class SymmetryReport:
    inversion_expectation: float
    rotation_expectation: float
    inversion_eigenvalue: int | None
    rotation_eigenvalue: int | None
    inversion_commutator: float
    rotation_commutator: float
    symmetric: bool
    sweep: SectorSweep | None = None


def _sweep(
    hamiltonian: EffectiveHamiltonian,
    d_values: typing.Sequence[float],
    sz_value: int,
) -> SectorSweep:
    sectors = symmetry_sectors(hamiltonian.basis, sz_value)
    base = (hamiltonian.xy_part + hamiltonian.static_field).dense()
    field_part = hamiltonian.sz2_sum.dense()

    def energies_at(d: float) -> tuple[dict[SectorKey, float], float]:
        return _sector_energies(base + d * field_part, sectors)

    rows = [energies_at(d) for d in d_values]
    coupling = max(c for _, c in rows)
    series = {key: tuple(e[key] for e, _ in rows) for key in SECTORS}

    def gap(d: float) -> float:
        energies, _ = energies_at(d)
        return energies[(1, 1)] - energies[(-1, -1)]

    crossing = None
    differences = [gap(d) for d in d_values]
    for k, (left, right) in enumerate(itertools.pairwise(differences)):
        if math.isnan(left) or math.isnan(right):
            break
        if left == 0:
            crossing = float(d_values[k])
            break
        if left * right < 0:
            crossing = float(brentq(gap, d_values[k], d_values[k + 1], xtol=1e-10))
            break

    return SectorSweep(
        d_values=tuple(float(d) for d in d_values),
        energies=series,
        inter_sector_coupling=coupling,
        crossing=crossing,
    )


def symmetry_diagnosis(
    hamiltonian: EffectiveHamiltonian,
    state: SpinState,
    d_values: typing.Sequence[float] | None = None,
    *,
    sz_value: int = 0,
) -> SymmetryReport:
    """Inversion and S_x-pi symmetry of `state` and `hamiltonian`.

    With `d_values` the lowest energy of each joint symmetry sector is tracked
    across a sweep of the (S_z)^2 field, and the crossing between the fully
    symmetric and fully antisymmetric sectors is located.
    """
    inversion = inversion_op(hamiltonian.basis)
    rotation = rotation_pi_sx_op(hamiltonian.basis)
    h = hamiltonian.at(0)
    scale = max(h.max_abs(), 1.0)

    inversion_commutator = inversion.commutator_norm(h)
    rotation_commutator = rotation.commutator_norm(h)
    symmetric = max(inversion_commutator, rotation_commutator) < 1e-10 * scale
    if not symmetric:
        log.warning(
            "Hamiltonian breaks the chain symmetries (commutators %.3e, %.3e)",
            inversion_commutator,
            rotation_commutator,
        )

    inversion_value = inversion.expectation(state).real
    rotation_value = rotation.expectation(state).real
    sweep = _sweep(hamiltonian, d_values, sz_value) if d_values is not None else None

    return SymmetryReport(
        inversion_expectation=inversion_value,
        rotation_expectation=rotation_value,
        inversion_eigenvalue=_eigenvalue(inversion_value),
        rotation_eigenvalue=_eigenvalue(rotation_value),
        inversion_commutator=inversion_commutator,
        rotation_commutator=rotation_commutator,
        symmetric=symmetric,
        sweep=sweep,
    )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled evolution with per-sample diagnostics."""

    times: NDArray[np.float64]
    states: tuple[SpinState, ...]
    fidelities: NDArray[np.float64]
    norms: NDArray[np.float64]
    energies: NDArray[np.float64]

    @property
    def final(self) -> SpinState:
        return self.states[-1]

    def populations(self) -> NDArray[np.float64]:
        return np.array([s.populations() for s in self.states])


@dataclass(frozen=True, eq=False)
class AdiabaticResult:
    trajectory: Trajectory
    start_overlap_all_zero: float
    final_ground: GroundState
    final_fidelity: float
    symmetric_fidelity: float
    symmetry: SymmetryReport

    @property
    def final_state(self) -> SpinState:
        return self.trajectory.final


def _symmetric_ground(hamiltonian: EffectiveHamiltonian, t: float, sz_value: int) -> SpinState:
    sectors = symmetry_sectors(hamiltonian.basis, sz_value)
    columns = sectors[(1, 1)]
    block = columns.T @ hamiltonian.at(t).dense() @ columns
    _, vectors = np.linalg.eigh(block)
    return SpinState(columns @ vectors[:, 0], hamiltonian.basis)


def adiabatic_prepare(
    spec: ChainSpec,
    coupling: CouplingSet,
    ramp: RampProfile,
    start: typing.Literal["all_zero"] = "all_zero",
    *,
    samples: int = 101,
    include_v_terms: bool = False,
    nbar: float = DEFAULT_NBAR,
    tolerance: float = STEP_TOLERANCE,
) -> AdiabaticResult:
    """Ramp the (S_z)^2 field down and follow the state.

    The run starts from the exact ground state of H(0) in the sector of
    |00...>, and reports its overlap with |00...>.
    """
    if start != "all_zero":
        raise ConfigurationError(f"unknown start state {start!r}", context="adiabatic_prepare")
    if samples < 2:
        raise ConfigurationError("samples must be >= 2", context="adiabatic_prepare")

    hamiltonian = build_effective(coupling, spec, include_v_terms, nbar=nbar, ramp=ramp)
    all_zero = reference_state("all_zero", spec.n_ions)
    sz_value = 0

    initial = ground_state(hamiltonian, sz_value, time=0.0)
    if initial.degenerate:
        log.warning("initial ground state is degenerate; starting from the first member")
    state = initial.state
    times = np.linspace(0.0, ramp.duration, samples)

    states = evolve_many(state, hamiltonian, times, tolerance=tolerance)
    fidelities = []
    energies = []
    for t, s in zip(times, states):
        instantaneous = ground_state(hamiltonian, sz_value, time=float(t))
        fidelities.append(max(m.fidelity(s) for m in instantaneous.multiplet))
        energies.append(hamiltonian.at(float(t)).expectation(s).real)

    trajectory = Trajectory(
        times=times,
        states=tuple(states),
        fidelities=np.array(fidelities),
        norms=np.array([s.norm for s in states]),
        energies=np.array(energies),
    )
    final_ground = ground_state(hamiltonian, sz_value, time=ramp.duration)
    final = trajectory.final
    return AdiabaticResult(
        trajectory=trajectory,
        start_overlap_all_zero=state.fidelity(all_zero),
        final_ground=final_ground,
        final_fidelity=float(trajectory.fidelities[-1]),
        symmetric_fidelity=_symmetric_ground(hamiltonian, ramp.duration, sz_value).fidelity(final),
        symmetry=symmetry_diagnosis(hamiltonian.with_d_field(ramp.value(ramp.duration)), final),
    )


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    detuning_ratio: float
    times: NDArray[np.float64]
    full_populations: NDArray[np.float64]
    effective_populations: NDArray[np.float64]
    top_level_population: float

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(np.abs(self.full_populations - self.effective_populations)))

    @property
    def truncation_flagged(self) -> bool:
        return self.top_level_population >= TRUNCATION_WARNING


def full_vs_effective(
    spec: ChainSpec,
    detuning_ratio: float,
    *,
    n_max: int = 3,
    phonons: PhononState | None = None,
    n_points: int = 201,
    periods: float = 1.0,
) -> ComparisonResult:
    """Compare spin populations of the full and effective models from |00...>.

    The beatnote is placed `detuning_ratio` times the largest COM drive
    strength eta*Omega above the COM mode. The comparison covers `periods`
    flop periods 1/(sqrt(2) J_max).
    """
    phonons = phonons or PhononState()
    modes = transverse_modes(spec)
    drive = float(np.max(np.abs(modes.lamb_dicke[:, 0]) * spec.rabi))
    tuned = replace(spec, mu_detuning=float(modes.mode_freqs[0]) + detuning_ratio * drive)

    coupling = derive_couplings(tuned, modes)
    j_max = float(np.max(np.abs(coupling.j_matrix)))
    if j_max == 0:
        raise ConfigurationError("couplings vanish; nothing to compare", context="full_vs_effective")
    times = np.linspace(0.0, periods / (math.sqrt(2) * j_max), n_points)

    spin = reference_state("all_zero", spec.n_ions)
    effective = build_effective(
        coupling,
        replace(tuned, d_field=0.0, site_shifts=None),
        include_v_terms=True,
        nbar=phonons.nbar,
    )
    effective_populations = np.array(
        [s.populations() for s in evolve_many(spin, effective, times)]
    )

    full = build_full(modes, tuned, n_max, phonons)
    weights = phonons.fock_weights(n_max)
    full_populations = np.zeros_like(effective_populations)
    top = 0.0
    for fock in itertools.product(range(n_max + 1), repeat=full.n_modes):
        weight = float(np.prod(weights[list(fock)]))
        if weight < 1e-12:
            continue
        for k, s in enumerate(evolve_many(full.product_state(spin, fock), full, times)):
            full_populations[k] += weight * s.populations()
            if not any(fock):
                top = max(top, full.top_level_population(s))

    result = ComparisonResult(
        detuning_ratio=detuning_ratio,
        times=times,
        full_populations=full_populations,
        effective_populations=effective_populations,
        top_level_population=top,
    )
    if result.truncation_flagged:
        log.warning(
            "phonon truncation at n_max=%d: top level reached population %.3e",
            n_max,
            top,
        )
    return result
