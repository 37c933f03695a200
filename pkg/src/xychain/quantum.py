"""Spin-1 Hilbert space: basis, local operators, symmetries and reference states."""

from __future__ import annotations

import itertools
import math
import typing
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from xychain.errors import ConfigurationError, HilbertSpaceSizeError

__all__ = [
    "BASIS_CAP",
    "DENSE_SITE_LIMIT",
    "Basis",
    "LinearOp",
    "OperatorKind",
    "ReferenceName",
    "SpinState",
    "aklt_overlaps",
    "aklt_state",
    "build_basis",
    "inversion_op",
    "reference_state",
    "rotation_pi_sx_op",
    "site_operator",
    "subspace_projector",
]

BASIS_CAP: int = 10
DENSE_SITE_LIMIT: int = 7
HERMITIAN_TOLERANCE: float = 1e-12

# Digit d on a site is the state with S_z = d - 1.
LABELS: str = "-0+"

OperatorKind = typing.Literal[
    "raise", "lower", "sz", "sz_squared", "sx", "sy", "identity", "zero_projector"
]
ReferenceName = typing.Literal[
    "all_zero", "eq10_ground", "aklt3", "two_spin_ground", "two_spin_top"
]

_SQRT2 = math.sqrt(2)
_LOCAL: dict[str, NDArray[np.complex128]] = {
    "raise": np.array([[0, 0, 0], [_SQRT2, 0, 0], [0, _SQRT2, 0]], dtype=complex),
    "lower": np.array([[0, _SQRT2, 0], [0, 0, _SQRT2], [0, 0, 0]], dtype=complex),
    "sz": np.diag([-1.0, 0.0, 1.0]).astype(complex),
    "sz_squared": np.diag([1.0, 0.0, 1.0]).astype(complex),
    "identity": np.eye(3, dtype=complex),
    "zero_projector": np.diag([0.0, 1.0, 0.0]).astype(complex),
}
_LOCAL["sx"] = (_LOCAL["raise"] + _LOCAL["lower"]) / 2
_LOCAL["sy"] = (_LOCAL["raise"] - _LOCAL["lower"]) / 2j


@dataclass(frozen=True, eq=False)
class Basis:
    """Product basis of `n_sites` spin-1 sites.

    Index encoding is base 3 with site 1 as the most significant digit.

    Examples:
        >>> basis = build_basis(2)
        >>> basis.dimension
        9
        >>> basis.label(basis.index("+-"))
        '+-'
        >>> [basis.label(i) for i in basis.sector(0)]
        ['-+', '00', '+-']
    """

    n_sites: int
    digits: NDArray[np.int8] = field(repr=False)
    sz_total: NDArray[np.int64] = field(repr=False)

    @property
    def dimension(self) -> int:
        return 3**self.n_sites

    def label(self, index: int) -> str:
        return "".join(LABELS[d] for d in self.digits[index])

    def labels(self) -> list[str]:
        return [self.label(i) for i in range(self.dimension)]

    def index(self, labels: str) -> int:
        if len(labels) != self.n_sites or any(c not in LABELS for c in labels):
            raise ConfigurationError(
                f"{labels!r} is not a {self.n_sites}-site label string"
            )
        result = 0
        for c in labels:
            result = 3 * result + LABELS.index(c)
        return result

    def sector(self, sz_value: int) -> NDArray[np.int64]:
        return np.flatnonzero(self.sz_total == sz_value)

    def sectors(self) -> list[int]:
        return list(range(-self.n_sites, self.n_sites + 1))


def build_basis(n_sites: int, *, cap: int = BASIS_CAP) -> Basis:
    if n_sites < 1:
        raise ConfigurationError(f"n_sites must be >= 1, got {n_sites}")
    if n_sites > cap:
        raise HilbertSpaceSizeError(
            f"{n_sites} sites exceeds the basis cap of {cap} (3^{cap} states)",
            context="build_basis",
        )

    digits = np.array(list(itertools.product(range(3), repeat=n_sites)), dtype=np.int8)
    sz_total = (digits.astype(np.int64) - 1).sum(axis=1)
    return Basis(n_sites=n_sites, digits=digits, sz_total=sz_total)


@dataclass(frozen=True, eq=False)
class LinearOp:
    """Sparse operator on the spin (or spin-phonon) state space."""

    matrix: sp.csr_array
    hermitian: bool = False

    def __post_init__(self):
        object.__setattr__(self, "matrix", sp.csr_array(self.matrix, dtype=complex))
        if self.hermitian:
            asymmetry = abs(self.matrix - self.matrix.conj().T)
            worst = asymmetry.max() if asymmetry.nnz else 0.0
            if worst >= HERMITIAN_TOLERANCE * max(1.0, self.max_abs()):
                raise ConfigurationError(
                    f"operator flagged hermitian differs from its adjoint by {worst:.3e}"
                )

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def max_abs(self) -> float:
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0

    def dense(self) -> NDArray[np.complex128]:
        if self.dimension > 3**DENSE_SITE_LIMIT:
            raise HilbertSpaceSizeError(
                f"dense form of a {self.dimension}-dimensional operator is not supported",
                context="LinearOp.dense",
            )
        return self.matrix.toarray()

    def adjoint(self) -> LinearOp:
        return LinearOp(self.matrix.conj().T, hermitian=self.hermitian)

    def restrict(self, indices: NDArray[np.int64]) -> LinearOp:
        return LinearOp(self.matrix[indices][:, indices], hermitian=self.hermitian)

    def commutator_norm(self, other: LinearOp) -> float:
        """Largest entry magnitude of [self, other]."""
        commutator = self.matrix @ other.matrix - other.matrix @ self.matrix
        return float(abs(commutator).max()) if commutator.nnz else 0.0

    def expectation(self, state: SpinState) -> complex:
        vector = state.amplitudes
        return complex(np.vdot(vector, self.matrix @ vector))

    def __matmul__(self, other):
        if isinstance(other, LinearOp):
            return LinearOp(self.matrix @ other.matrix)
        if isinstance(other, SpinState):
            return other.with_amplitudes(self.matrix @ other.amplitudes)
        return self.matrix @ other

    def __add__(self, other: LinearOp) -> LinearOp:
        return LinearOp(
            self.matrix + other.matrix, hermitian=self.hermitian and other.hermitian
        )

    def __sub__(self, other: LinearOp) -> LinearOp:
        return LinearOp(
            self.matrix - other.matrix, hermitian=self.hermitian and other.hermitian
        )

    def __mul__(self, scalar: complex) -> LinearOp:
        return LinearOp(
            self.matrix * scalar,
            hermitian=self.hermitian and complex(scalar).imag == 0,
        )

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpinState:
    """State vector over the product basis, optionally tensored with phonon Fock spaces.

    With phonons the spin index is the most significant factor.
    """

    amplitudes: NDArray[np.complex128]
    basis: Basis
    phonon_dims: tuple[int, ...] = ()

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        expected = self.basis.dimension * math.prod(self.phonon_dims)
        if amplitudes.shape != (expected,):
            raise ConfigurationError(
                f"state has shape {amplitudes.shape}, expected ({expected},)"
            )
        object.__setattr__(self, "amplitudes", amplitudes)

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def with_amplitudes(self, amplitudes: NDArray[np.complex128]) -> SpinState:
        return SpinState(amplitudes, self.basis, self.phonon_dims)

    def normalized(self) -> SpinState:
        if self.norm == 0:
            raise ConfigurationError("cannot normalize the zero vector")
        return self.with_amplitudes(self.amplitudes / self.norm)

    def overlap(self, other: SpinState) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: SpinState) -> float:
        return abs(self.overlap(other)) ** 2

    def spin_matrix(self) -> NDArray[np.complex128]:
        """Amplitudes reshaped to (spin index, phonon index)."""
        return self.amplitudes.reshape(self.basis.dimension, -1)

    def populations(self) -> NDArray[np.float64]:
        """Probability of each spin basis state, phonons traced out."""
        return np.sum(np.abs(self.spin_matrix()) ** 2, axis=1)

    def density_matrix(self) -> NDArray[np.complex128]:
        """Reduced spin density matrix."""
        psi = self.spin_matrix()
        return psi @ psi.conj().T

    def spin_state(self) -> SpinState:
        """Drop the phonon factor; only valid when phonons are in a product state."""
        if not self.phonon_dims:
            return self
        psi = self.spin_matrix()
        _, values, vectors = np.linalg.svd(psi)
        if len(values) > 1 and values[1] > 1e-9:
            raise ConfigurationError("spin and phonons are entangled")
        return SpinState(psi @ vectors[0].conj(), self.basis)

    def sector_populations(self) -> dict[int, float]:
        probabilities = self.populations()
        return {
            sz: float(probabilities[self.basis.sector(sz)].sum())
            for sz in self.basis.sectors()
        }

    def records(self) -> list[dict[str, typing.Any]]:
        """Nonzero spin amplitudes as JSON-ready rows."""
        if self.phonon_dims:
            raise ConfigurationError("records are only defined for pure spin states")
        return [
            {
                "index": int(i),
                "label": self.basis.label(i),
                "re": float(a.real),
                "im": float(a.imag),
            }
            for i, a in enumerate(self.amplitudes)
            if abs(a) > 0
        ]

    @classmethod
    def from_labels(cls, basis: Basis, terms: typing.Mapping[str, complex]) -> SpinState:
        """Normalized superposition of the labelled basis states."""
        amplitudes = np.zeros(basis.dimension, dtype=complex)
        for labels, amplitude in terms.items():
            amplitudes[basis.index(labels)] += amplitude
        return cls(amplitudes, basis).normalized()


def _check_site(basis: Basis, site: int):
    if not 1 <= site <= basis.n_sites:
        raise ConfigurationError(
            f"site {site} is outside 1..{basis.n_sites}", context="site_operator"
        )


def _embed(local: NDArray[np.complex128], site: int, n_sites: int) -> sp.csr_array:
    left = sp.identity(3 ** (site - 1), dtype=complex, format="csr")
    right = sp.identity(3 ** (n_sites - site), dtype=complex, format="csr")
    return sp.csr_array(sp.kron(sp.kron(left, sp.csr_array(local)), right))


def site_operator(basis: Basis, site: int, kind: OperatorKind) -> LinearOp:
    """Spin-1 operator `kind` acting on `site` (1-based), identity elsewhere.

    Examples:
        >>> basis = build_basis(1)
        >>> (site_operator(basis, 1, "raise").dense() @ [0, 1, 0]).real.round(6).tolist()
        [0.0, 0.0, 1.414214]
    """
    _check_site(basis, site)
    if kind not in _LOCAL:
        raise ConfigurationError(f"unknown operator kind {kind!r}", context="site_operator")

    hermitian = kind not in ("raise", "lower")
    return LinearOp(_embed(_LOCAL[kind], site, basis.n_sites), hermitian=hermitian)


def subspace_projector(basis: Basis, sz_value: int) -> LinearOp:
    diagonal = (basis.sz_total == sz_value).astype(complex)
    return LinearOp(sp.diags_array(diagonal, format="csr"), hermitian=True)


def _permutation(rows: NDArray[np.int64], values: NDArray | None = None) -> sp.csr_array:
    size = len(rows)
    data = np.ones(size, dtype=complex) if values is None else values
    return sp.csr_array((data, (rows, np.arange(size))), shape=(size, size))


def inversion_op(basis: Basis) -> LinearOp:
    """Mirror the chain: site i goes to site n + 1 - i."""
    reversed_digits = basis.digits[:, ::-1].astype(np.int64)
    weights = 3 ** np.arange(basis.n_sites - 1, -1, -1)
    return LinearOp(_permutation(reversed_digits @ weights), hermitian=True)


def rotation_pi_sx_op(basis: Basis) -> LinearOp:
    """Global pi rotation about S_x.

    Each site picks up exp(-i pi S_x), which sends |+> to -|->, |-> to -|+>
    and |0> to -|0>. The overall phase (-1)^n is dropped, so the operator is
    the plain exchange of |+> and |->.
    """
    swapped = (2 - basis.digits).astype(np.int64)
    weights = 3 ** np.arange(basis.n_sites - 1, -1, -1)
    return LinearOp(_permutation(swapped @ weights), hermitian=True)


def aklt_state(n_sites: int, boundary: NDArray[np.complex128]) -> SpinState:
    """Open-chain AKLT state Tr(A_s1 ... A_sn B) for a 2x2 boundary matrix B.

    The result is normalized unless it vanishes.
    """
    basis = build_basis(n_sites)
    sigma_plus = np.array([[0, 1], [0, 0]], dtype=complex)
    sigma_z = np.diag([1.0, -1.0]).astype(complex)
    tensors = (
        -math.sqrt(2 / 3) * sigma_plus.T,
        -math.sqrt(1 / 3) * sigma_z,
        math.sqrt(2 / 3) * sigma_plus,
    )

    amplitudes = np.empty(basis.dimension, dtype=complex)
    for index, digits in enumerate(basis.digits):
        product = np.eye(2, dtype=complex)
        for d in digits:
            product = product @ tensors[d]
        amplitudes[index] = np.trace(product @ boundary)

    state = SpinState(amplitudes, basis)
    return state.normalized() if state.norm > 1e-14 else state


def _aklt_span(n_sites: int) -> NDArray[np.complex128]:
    columns = []
    for a, b in itertools.product(range(2), repeat=2):
        boundary = np.zeros((2, 2), dtype=complex)
        boundary[a, b] = 1
        columns.append(aklt_state(n_sites, boundary).amplitudes)
    return np.column_stack(columns)


def aklt_overlaps(state: SpinState) -> dict[str, float]:
    """Squared overlap of `state` with AKLT states for several boundary choices.

    Keys are `edge_ab` for the product boundaries, `trace` for the closed
    chain and `optimal` for the best boundary matrix.
    """
    n_sites = state.basis.n_sites
    result = {}
    for a, b in itertools.product(range(2), repeat=2):
        boundary = np.zeros((2, 2), dtype=complex)
        boundary[a, b] = 1
        result[f"edge_{'ud'[a]}{'ud'[b]}"] = aklt_state(n_sites, boundary).fidelity(state)

    result["trace"] = aklt_state(n_sites, np.eye(2, dtype=complex)).fidelity(state)

    vectors, values, _ = np.linalg.svd(_aklt_span(n_sites), full_matrices=False)
    span = vectors[:, values > 1e-12 * values[0]]
    projection = span.conj().T @ state.amplitudes
    result["optimal"] = float(np.vdot(projection, projection).real)
    return result


def _optimal_aklt(target: SpinState) -> SpinState:
    span = _aklt_span(target.basis.n_sites)
    coefficients, *_ = np.linalg.lstsq(span, target.amplitudes, rcond=None)
    return SpinState(span @ coefficients, target.basis).normalized()


def reference_state(name: ReferenceName, n_sites: int | None = None) -> SpinState:
    """Named reference states.

    `all_zero` needs `n_sites`; the two-spin states have two sites and
    `eq10_ground`/`aklt3` have three. `aklt3` is the AKLT state whose boundary
    maximizes the overlap with `eq10_ground`.

    Examples:
        >>> round(reference_state("eq10_ground").norm, 12)
        1.0
        >>> abs(reference_state("two_spin_ground").overlap(reference_state("two_spin_top"))) < 1e-12
        True
    """
    if name == "all_zero":
        if n_sites is None:
            raise ConfigurationError("all_zero needs n_sites", context="reference_state")
        return SpinState.from_labels(build_basis(n_sites), {"0" * n_sites: 1})

    fixed_sites = {
        "eq10_ground": 3,
        "aklt3": 3,
        "two_spin_ground": 2,
        "two_spin_top": 2,
    }
    if name not in fixed_sites:
        raise ConfigurationError(f"unknown reference state {name!r}", context="reference_state")
    if n_sites is not None and n_sites != fixed_sites[name]:
        raise ConfigurationError(
            f"{name} has {fixed_sites[name]} sites, not {n_sites}", context="reference_state"
        )

    basis = build_basis(fixed_sites[name])
    if name in ("two_spin_ground", "two_spin_top"):
        sign = -1 if name == "two_spin_ground" else 1
        return SpinState.from_labels(
            basis, {"00": 1 / _SQRT2, "-+": sign / 2, "+-": sign / 2}
        )

    a, b = math.sqrt(0.16), math.sqrt(0.18)
    eq10 = SpinState.from_labels(
        basis,
        {"0-+": a, "0+-": -a, "-+0": a, "+-0": -a, "+0-": b, "-0+": -b},
    )
    if name == "eq10_ground":
        return eq10
    return _optimal_aklt(eq10)
