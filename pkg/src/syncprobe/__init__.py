"""Dissipative qubit-probe dynamics, synchronization detection, and bath
spectral-density reconstruction from probe-only measurements."""

from .bath import (
    DegenerateSpectrumError,
    KAPPA_DEFAULT,
    LindbladRates,
    OutOfDomainError,
    PowerLawCutoff,
    SpectralDensityModel,
    Tabulated,
    bose_occupation,
    evaluate_J,
    lindblad_rates,
    model_from_config,
    model_to_config,
)
from .dynamics import (
    AsymptoticForm,
    AsymptoticTerm,
    NoUniqueSteadyStateError,
    StateValidationError,
    Trajectory,
    asymptotic_form,
    default_time_grid,
    evolve_analytic,
    evolve_numeric,
    fock_observable_weights,
    plus_plus_state,
    steady_state,
    to_computational_basis,
    to_eigenmode_basis,
    trajectory_to_csv,
    validate_density_matrix,
)
from .signal_analysis import (
    ANTI_PHASE,
    IN_PHASE,
    INDETERMINATE,
    NO_SYNC,
    NotResolvableError,
    Peak,
    SpectrumEstimate,
    SyncConfig,
    SyncMetrics,
    detect_sync,
    mutual_information,
    peak_linewidth,
    spectrum_to_csv,
    spin_correlator,
    sync_measure,
    sync_metrics_to_record,
    windowed_fft,
)
from .probe_protocol import (
    InsufficientSpectrumError,
    InversionError,
    LinewidthDatum,
    NoTransitionError,
    RankDeficiencyError,
    ReconstructionResult,
    ResolutionError,
    ScanConfig,
    TransitionPoint,
    collect_constraints,
    fit_spectral_density,
    infer_system_params,
    predict_transition,
    reconstruction_to_record,
    scan_transition,
    transition_point,
    transition_point_to_record,
)
from .spin_model import (
    EigenStructure,
    OperatorSet,
    QubitPairParams,
    build_operators,
    diagonalize,
    direct_diagonalize,
    eigenmode_transform,
)

__version__ = "0.1.0"

__all__ = [
    "ANTI_PHASE",
    "AsymptoticForm",
    "AsymptoticTerm",
    "DegenerateSpectrumError",
    "EigenStructure",
    "INDETERMINATE",
    "IN_PHASE",
    "InsufficientSpectrumError",
    "InversionError",
    "KAPPA_DEFAULT",
    "LindbladRates",
    "LinewidthDatum",
    "NO_SYNC",
    "NoTransitionError",
    "NoUniqueSteadyStateError",
    "NotResolvableError",
    "OperatorSet",
    "OutOfDomainError",
    "Peak",
    "PowerLawCutoff",
    "QubitPairParams",
    "RankDeficiencyError",
    "ReconstructionResult",
    "ResolutionError",
    "ScanConfig",
    "SpectralDensityModel",
    "SpectrumEstimate",
    "StateValidationError",
    "SyncConfig",
    "SyncMetrics",
    "Tabulated",
    "Trajectory",
    "TransitionPoint",
    "asymptotic_form",
    "bose_occupation",
    "build_operators",
    "collect_constraints",
    "default_time_grid",
    "detect_sync",
    "diagonalize",
    "direct_diagonalize",
    "eigenmode_transform",
    "evaluate_J",
    "evolve_analytic",
    "evolve_numeric",
    "fit_spectral_density",
    "fock_observable_weights",
    "infer_system_params",
    "lindblad_rates",
    "model_from_config",
    "model_to_config",
    "mutual_information",
    "peak_linewidth",
    "plus_plus_state",
    "predict_transition",
    "reconstruction_to_record",
    "scan_transition",
    "spectrum_to_csv",
    "spin_correlator",
    "steady_state",
    "sync_measure",
    "sync_metrics_to_record",
    "to_computational_basis",
    "to_eigenmode_basis",
    "trajectory_to_csv",
    "transition_point",
    "transition_point_to_record",
    "validate_density_matrix",
    "windowed_fft",
]
