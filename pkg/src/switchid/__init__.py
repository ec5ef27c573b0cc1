"""Switched linear system simulation, identification, and bound verification."""

__version__ = "0.1.0"

from .errors import (
    CertificationError,
    InfeasibleSpecError,
    InvalidInputError,
    NoDataError,
    ResourceLimitError,
    SwitchIdError,
)
from .system import (
    NoiseSpec,
    SwitchedSystem,
    SwitchingSignal,
    Trajectory,
    gramian,
    simulate,
    transition_product,
)
from .signals import AverageDwellParams, SignalClassSpec, ValidationReport, generate, validate
from .stability import (
    AverageClassCertificate,
    EnvelopeConstants,
    HorizonCertificate,
    average_dwell_tau_star,
    certify_average_class,
    find_stability_horizon,
    fit_decay_envelope,
    max_allowed_N0,
    minimum_dwell_time,
    product_norm_extremes,
    ratio_r,
)
from .gramian_bounds import (
    GramianBound,
    arbitrary_sandwich,
    arbitrary_upper_simple,
    average_upper,
    cumulative_g,
    dwell_lower,
    dwell_upper,
    envelope_f,
)
from .error_bounds import (
    ArbitraryClass,
    AverageClass,
    ErrorBoundParams,
    ErrorBoundReport,
    MinDwellClass,
    burn_in_threshold,
    class_composed_bound,
    ls_bound,
)
from .estimator import ModeEstimates, ModePartition, error_norms, fit, partition
from .config import ExperimentConfig, load_config, preset_config
from .experiments import ErrorStats, SweepTable, checkpoint_times, run_monte_carlo, sweep_gramian

__all__ = [name for name in dir() if not name.startswith("_")]
