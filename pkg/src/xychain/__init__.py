from xychain.couplings import (
    CouplingSet,
    PowerLawFit,
    alpha_scan,
    coupling_matrix,
    derive_couplings,
    fit_power_law,
    power_law_couplings,
    spin_phonon_shifts,
    tune_alpha,
)
from xychain.dynamics import (
    EffectiveHamiltonian,
    FullHamiltonian,
    PhononState,
    RampProfile,
    adiabatic_prepare,
    build_effective,
    build_full,
    evolve,
    evolve_many,
    full_vs_effective,
    ground_state,
    symmetry_diagnosis,
)
from xychain.errors import (
    ConfigurationError,
    NumericalError,
    PhysicsError,
    SimulationError,
)
from xychain.ionchain import ChainSpec, NormalModes, equilibrium_positions, transverse_modes
from xychain.protocol import (
    MeasurementConfig,
    ParityCurve,
    RotationPulse,
    WitnessReport,
    apply_rotation,
    detect,
    entanglement_sequence,
    entanglement_vs_time,
    ground_state_sequence,
    parity,
    parity_scan,
    random_separable_state,
    witness,
)
from xychain.quantum import (
    Basis,
    LinearOp,
    SpinState,
    aklt_overlaps,
    aklt_state,
    build_basis,
    inversion_op,
    reference_state,
    rotation_pi_sx_op,
    site_operator,
    subspace_projector,
)

# isort: split
from xychain.config import ExperimentConfig, load_config
from xychain.experiments import run_experiment
from xychain.presets import list_presets

__all__ = [
    "Basis",
    "ChainSpec",
    "ConfigurationError",
    "CouplingSet",
    "EffectiveHamiltonian",
    "ExperimentConfig",
    "FullHamiltonian",
    "LinearOp",
    "MeasurementConfig",
    "NormalModes",
    "NumericalError",
    "ParityCurve",
    "PhononState",
    "PhysicsError",
    "PowerLawFit",
    "RampProfile",
    "RotationPulse",
    "SimulationError",
    "SpinState",
    "WitnessReport",
    "adiabatic_prepare",
    "aklt_overlaps",
    "aklt_state",
    "alpha_scan",
    "apply_rotation",
    "build_basis",
    "build_effective",
    "build_full",
    "coupling_matrix",
    "derive_couplings",
    "detect",
    "entanglement_sequence",
    "entanglement_vs_time",
    "equilibrium_positions",
    "evolve",
    "evolve_many",
    "fit_power_law",
    "full_vs_effective",
    "ground_state",
    "ground_state_sequence",
    "inversion_op",
    "list_presets",
    "load_config",
    "parity",
    "parity_scan",
    "power_law_couplings",
    "random_separable_state",
    "reference_state",
    "rotation_pi_sx_op",
    "run_experiment",
    "site_operator",
    "spin_phonon_shifts",
    "subspace_projector",
    "symmetry_diagnosis",
    "transverse_modes",
    "tune_alpha",
    "witness",
]
